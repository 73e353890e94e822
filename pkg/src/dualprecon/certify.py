"""Numerical certification of the dual relative smoothness conditions.

Two routes are provided and kept independent: sampled Bregman-divergence
ratios (first-order route) and pointwise matrix inequalities on Hessians
(second-order route), plus the closed-form constants for the shipped
problem families. Sampled extrema are estimates, not proofs; reports carry
the sample counts.
"""

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.optimize

from .core import Array, DualReference, Objective, bregman_divergence
from .problems import ProblemInstance, pnorm_objective


class AssumptionViolationError(ValueError):
    """A structural assumption of a problem family fails numerically."""


class ConditioningError(ValueError):
    """Reference Hessian is singular or indefinite at the query point."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(f"{message} (lambda_min = {lambda_min:.6g})")
        self.lambda_min = lambda_min


@dataclass
class CertificateReport:
    L_star_estimate: Optional[float] = None
    mu_star_estimate: Optional[float] = None
    closed_form_L_star: Optional[float] = None
    closed_form_mu_star: Optional[float] = None
    n_samples: int = 0
    worst_violation: float = 0.0
    constants: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "L_star_estimate": self.L_star_estimate,
            "mu_star_estimate": self.mu_star_estimate,
            "closed_form_L_star": self.closed_form_L_star,
            "closed_form_mu_star": self.closed_form_mu_star,
            "n_samples": self.n_samples,
            "worst_violation": self.worst_violation,
            "constants": self.constants,
        }


def write_report(report: CertificateReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")


def read_report(path) -> CertificateReport:
    with open(path) as fh:
        doc = json.load(fh)
    return CertificateReport(**doc)


# ---------------------------------------------------------------------------
# sampled first-order route
# ---------------------------------------------------------------------------


def log_radius_pair_sampler(
    dim: int, rng: np.random.Generator, radii: Tuple[float, float] = (1e-2, 1e2)
) -> Callable[[], Tuple[Array, Array]]:
    """Gaussian directions scaled to log-uniform radii, probing both the
    quadratic and the tail regime of the reference function."""
    lo, hi = np.log(radii[0]), np.log(radii[1])

    def draw():
        u = rng.standard_normal(dim)
        u /= np.linalg.norm(u)
        return np.exp(rng.uniform(lo, hi)) * u

    return lambda: (draw(), draw())


def sample_bregman_ratio(
    f: Objective,
    k: DualReference,
    sampler: Callable[[], Tuple[Array, Array]],
    n_pairs: int,
    degenerate_tol: float = 1e-12,
):
    """Extremes of D_k(grad_f(y), grad_f(x)) / D_f(x, y) over sampled pairs.

    The supremum lower-bounds any valid smoothness constant and the infimum
    upper-bounds any valid strong-convexity constant. Pairs with D_f below
    ``degenerate_tol`` are skipped (and counted via the ratio array length).
    """
    ratios = []
    for _ in range(n_pairs):
        x, y = sampler()
        df = bregman_divergence(f, x, y)
        if df <= degenerate_tol:
            continue
        dk = bregman_divergence(k, f.gradient(y), f.gradient(x))
        ratios.append(dk / df)
    ratios = np.array(ratios)
    if ratios.size == 0:
        raise AssumptionViolationError("all sampled pairs were degenerate")
    return float(np.min(ratios)), float(np.max(ratios)), ratios


# ---------------------------------------------------------------------------
# second-order route
# ---------------------------------------------------------------------------


def check_second_order(
    f: Objective,
    k: DualReference,
    x: Array,
    L_star: float,
    mu_star: float = 0.0,
    tol: float = 1e-8,
) -> dict:
    """Pointwise sandwich check mu* <= eig(M^1/2 Hf M^1/2) <= L* where M is
    the reference Hessian evaluated at grad_f(x)."""
    x = np.asarray(x, dtype=float)
    M = k.hessian(f.gradient(x))
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w[0] <= 0.0:
        raise ConditioningError("reference Hessian not positive definite", float(w[0]))
    Msqrt = (V * np.sqrt(w)) @ V.T
    S = Msqrt @ f.hessian(x) @ Msqrt
    eigs = np.linalg.eigvalsh(0.5 * (S + S.T))
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    return {
        "pass": (lam_min >= mu_star - tol) and (lam_max <= L_star + tol),
        "lambda_min": lam_min,
        "lambda_max": lam_max,
        "lower_margin": lam_min - mu_star,
        "upper_margin": L_star - lam_max,
    }


# ---------------------------------------------------------------------------
# closed-form constants: p-norm regression
# ---------------------------------------------------------------------------


def _unit(w: Array) -> Array:
    return w / np.linalg.norm(w)


def _refine_on_sphere(func, w0: Array, minimize: bool) -> float:
    sign = 1.0 if minimize else -1.0

    def obj(w):
        n = np.linalg.norm(w)
        if n == 0.0:
            return np.inf
        return sign * func(w / n)

    res = scipy.optimize.minimize(obj, w0, method="L-BFGS-B")
    best = sign * res.fun if np.isfinite(res.fun) else func(_unit(w0))
    return float(min(best, func(_unit(w0))) if minimize else max(best, func(_unit(w0))))


def _sphere_extremum(func, d, n_dirs, rng, minimize=True):
    dirs = rng.standard_normal((n_dirs, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = np.array([func(s) for s in dirs])
    idx = int(np.argmin(vals) if minimize else np.argmax(vals))
    return _refine_on_sphere(func, dirs[idx], minimize)


def _pair_sphere_extremum(func, d, n_dirs, rng, minimize=True):
    # func takes (u, v), each restricted to the unit sphere
    dirs = rng.standard_normal((n_dirs, 2, d))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    vals = np.array([func(u, v) for u, v in dirs])
    idx = int(np.argmin(vals) if minimize else np.argmax(vals))
    sign = 1.0 if minimize else -1.0

    def obj(w):
        u, v = w[:d], w[d:]
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            return np.inf
        return sign * func(u / nu, v / nv)

    w0 = dirs[idx].ravel()
    res = scipy.optimize.minimize(obj, w0, method="L-BFGS-B")
    refined = sign * res.fun if np.isfinite(res.fun) else vals[idx]
    return float(min(refined, vals[idx]) if minimize else max(refined, vals[idx]))


def pnorm_constants(
    inst: ProblemInstance, n_dirs: int = 200, seed: int = 0
) -> CertificateReport:
    """Closed-form dual constants for p-norm regression.

    The sphere/ball infima (c_G, c_H, rho_H) are sampled over ``n_dirs``
    directions and refined by local descent, so the derived constants are
    estimates for d > 1.
    """
    if inst.kind != "pnorm":
        raise ValueError("expected a pnorm instance")
    A, b, p = inst.A, inst.b, float(inst.p)
    d = inst.d
    rng = np.random.default_rng(seed)

    if p == 2.0:
        # quadratic objective: reference Hessian is the identity
        eigs = np.linalg.eigvalsh(A.T @ A)
        report = CertificateReport(
            closed_form_L_star=float(2.0 * eigs[-1]),
            closed_form_mu_star=float(2.0 * eigs[0]),
            constants={"lambda_min_AtA": float(eigs[0]), "lambda_max_AtA": float(eigs[-1])},
        )
        return report

    def norm_p_pow(s):
        return float(np.sum(np.abs(A @ s) ** p))

    def mixed_form(u, v):
        return float(np.sum(np.abs(A @ u) ** (p - 2.0) * (A @ v) ** 2))

    c_G = _sphere_extremum(norm_p_pow, d, n_dirs, rng, minimize=True)
    sup_G = _sphere_extremum(norm_p_pow, d, n_dirs, rng, minimize=False)
    c_H = _pair_sphere_extremum(mixed_form, d, n_dirs, rng, minimize=True)
    sup_H = _pair_sphere_extremum(mixed_form, d, n_dirs, rng, minimize=False)

    if c_G <= 0.0:
        raise AssumptionViolationError("c_G estimate is nonpositive")
    if c_H <= 0.0:
        raise AssumptionViolationError("c_H estimate is nonpositive")

    sum_bp = float(np.sum(np.abs(b) ** p))
    B_H = float(np.linalg.norm((A.T * np.abs(b) ** (p - 2.0)) @ A, ord=2))

    L_G = 2.0 ** (1.0 - p) * c_G
    C_G = sum_bp ** ((p - 1.0) / p) * c_G ** (1.0 / p)
    U_G = 2.0 ** (p - 2.0) * (p + 1.0) * sup_G
    D_G = 2.0 ** (p - 2.0) * (p - 1.0) * sum_bp

    R_H = (B_H / (c_H * 2.0**-p)) ** (1.0 / (p - 2.0))
    rho_H = _ball_hessian_min_eig(A, b, p, R_H, n_dirs, rng)

    if R_H > 0.0:
        L_H = min(p * (p - 1.0) * 2.0 ** (-p - 1.0) * c_H, rho_H / (2.0 * R_H ** (p - 2.0)))
        C_H = min(rho_H / 2.0, p * (p - 1.0) * 2.0 ** (-p - 1.0) * c_H * R_H ** (p - 2.0))
    else:
        L_H = p * (p - 1.0) * 2.0 ** (-p - 1.0) * c_H
        C_H = 0.0
    U_H = 2.0 ** (p - 3.0) * p * (p - 1.0) * sup_H
    D_H = p * (p - 1.0) * 2.0 ** (p - 3.0) * B_H

    expo = (p - 2.0) / (p - 1.0)
    mu_star = min(
        C_H / (2.0 * (p - 1.0) * (2.0 + 2.0 * D_G)),
        L_H / (4.0 * (p - 1.0) * U_G**expo),
    )
    L_star = min(
        U_H / (L_G / 2.0) ** expo,
        4.0 * U_H * (C_G / L_G) ** expo + 2.0 * D_H,
    )

    return CertificateReport(
        closed_form_L_star=float(L_star),
        closed_form_mu_star=float(mu_star),
        n_samples=n_dirs,
        constants={
            "c_G": c_G,
            "c_H": c_H,
            "L_G": L_G,
            "C_G": C_G,
            "U_G": U_G,
            "D_G": D_G,
            "L_H": L_H,
            "U_H": U_H,
            "C_H": C_H,
            "D_H": D_H,
            "R_H": R_H,
            "rho_H": rho_H,
        },
    )


def _ball_hessian_min_eig(A, b, p, R_H, n_samples, rng):
    """Estimate inf of lambda_min(hessian) over the ball of radius R_H."""
    if R_H == 0.0:
        return 0.0
    f = pnorm_objective(ProblemInstance(kind="pnorm", A=A, b=b, p=p))
    d = A.shape[1]

    def lam_min_and_vec(x):
        w, V = np.linalg.eigh(f.hessian(x))
        return float(w[0]), V[:, 0]

    def lam_min(x):
        return lam_min_and_vec(x)[0]

    def lam_min_grad(x):
        # d lambda_min / dx via the eigenvector of the smallest eigenvalue
        _, u = lam_min_and_vec(x)
        r = A @ x - b
        w = np.abs(r)
        if p < 3.0:
            w = np.maximum(w, 1e-12)
        coeff = w ** (p - 3.0) * np.sign(r) * (A @ u) ** 2
        return p * (p - 1.0) * (p - 2.0) * (A.T @ coeff)

    pts = rng.standard_normal((n_samples, d))
    pts *= (R_H * rng.uniform(0, 1, n_samples) ** (1.0 / d) / np.linalg.norm(pts, axis=1))[
        :, None
    ]
    vals = np.array([lam_min(x) for x in pts])
    x0 = pts[int(np.argmin(vals))]

    res = scipy.optimize.minimize(
        lam_min,
        x0,
        jac=lam_min_grad,
        method="SLSQP",
        constraints=[
            {
                "type": "ineq",
                "fun": lambda x: R_H**2 - float(x @ x),
                "jac": lambda x: -2.0 * x,
            }
        ],
        options={"maxiter": 200},
    )
    best = min(float(np.min(vals)), float(res.fun) if np.isfinite(res.fun) else np.inf)
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# closed-form constants: exponential penalties
# ---------------------------------------------------------------------------


def _exact_eta(A: Array) -> float:
    """sup of ||A^T s|| over the sign cube, attained at a vertex."""
    n = A.shape[0]
    best = 0.0
    # chunked enumeration of the 2^(n-1) sign patterns (norm is sign-symmetric)
    patterns = np.arange(2 ** (n - 1), dtype=np.uint64)
    for chunk in np.array_split(patterns, max(1, patterns.size // 65536)):
        bits = (chunk[:, None] >> np.arange(n, dtype=np.uint64)) & 1
        signs = 2.0 * bits.astype(float) - 1.0
        norms = np.linalg.norm(signs @ A, axis=1)
        best = max(best, float(np.max(norms)))
    return best


def eta_bound(A: Array) -> float:
    """The generic upper bound sqrt(n) * max column absolute sum."""
    n = A.shape[0]
    return float(np.sqrt(n) * np.max(np.sum(np.abs(A), axis=0)))


def exp_penalty_constants(
    inst: ProblemInstance,
    r: Optional[float] = None,
    R: Optional[float] = None,
    exact_eta_limit: int = 20,
) -> CertificateReport:
    """Dual smoothness constant for the exponential penalty objective.

    ``r`` and ``R`` are the inradius/circumradius of the constraint polytope
    and must be supplied by the caller (they are analytic for box instances;
    computing them for general polytopes is out of scope).
    """
    if inst.kind != "exp_penalty":
        raise ValueError("expected an exp_penalty instance")
    if r is None or R is None:
        raise ValueError("exp_penalty_constants requires polytope radii r and R")
    if r <= 0 or R <= 0:
        raise ValueError("radii must be positive")
    A, c, tau = inst.A, inst.c, float(inst.tau)
    n = inst.n

    eta = _exact_eta(A) if n <= exact_eta_limit else eta_bound(A)
    ata_norm = float(np.linalg.eigvalsh(A.T @ A)[-1])
    L_star_tau = (2.0 * R / r) * (ata_norm / tau) * (eta + float(np.linalg.norm(c)))

    return CertificateReport(
        closed_form_L_star=L_star_tau,
        constants={
            "eta": eta,
            "r": float(r),
            "R": float(R),
            "AtA_norm": ata_norm,
            "L_star_tau": L_star_tau,
        },
    )


# ---------------------------------------------------------------------------
# condition-number comparison for diagonal p-norm problems
# ---------------------------------------------------------------------------


def primal_dual_condition_comparison(A: Array, b: Array, p: float) -> Tuple[float, float]:
    """Closed-form condition numbers of the two preconditioning routes for
    f(x) = ||Ax - b||^p / p with diagonal positive-definite A."""
    if p <= 2:
        raise ValueError("p must be > 2")
    sv = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    kappa = float(sv[0] / sv[-1])
    q = p / (p - 1.0)
    primal = p**2 * kappa**p
    dual = (p - 1.0) ** 2 * kappa ** (4.0 - q)
    return float(primal), float(dual)
