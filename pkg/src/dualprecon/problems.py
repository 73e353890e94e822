"""Concrete objective / dual-reference pairs and instance (de)serialization.

Shipped problems: p-norm regression, exponential penalty relaxation of a
linear program, positive-definite quadratics (linear preconditioning), and
the 1-d shifted power family.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .core import Array, DomainError, DualReference, NumericalRangeError, Objective

_EXP_LIMIT = 700.0  # largest exponent evaluated before rejecting as overflow

_KINDS = ("pnorm", "exp_penalty", "quadratic", "power1d")


@dataclass
class ProblemInstance:
    kind: str
    A: Array
    b: Array
    c: Optional[Array] = None
    p: Optional[float] = None
    tau: Optional[float] = None
    seed: Optional[int] = None
    box: bool = False  # exp_penalty axis-aligned box (analytic r=1, R=sqrt(d))

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float)
        if self.kind == "pnorm":
            if self.p is None or self.p < 2:
                raise ValueError("pnorm requires exponent p >= 2")
            sv = np.linalg.svd(self.A, compute_uv=False)
            if sv[-1] <= 1e-10 * sv[0]:
                raise ValueError("pnorm requires A of full column rank")
        if self.kind == "exp_penalty":
            if self.tau is None or self.tau <= 0:
                raise ValueError("exp_penalty requires temperature tau > 0")
            norms = np.linalg.norm(self.A, axis=1)
            if np.any(norms == 0.0):
                raise ValueError("exp_penalty rows must be nonzero")
            # normalize rows to unit norm, rescaling b to preserve the polytope
            self.A = self.A / norms[:, None]
            self.b = self.b / norms
            if self.c is None:
                raise ValueError("exp_penalty requires cost vector c")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]


# ---------------------------------------------------------------------------
# p-norm regression
# ---------------------------------------------------------------------------


def pnorm_objective(inst: ProblemInstance) -> Objective:
    """f(x) = ||Ax - b||_p^p (not divided by p)."""
    if inst.kind != "pnorm":
        raise ValueError("expected a pnorm instance")
    A, b, p = inst.A, inst.b, float(inst.p)

    def value(x):
        r = A @ x - b
        return float(np.sum(np.abs(r) ** p))

    def gradient(x):
        r = A @ x - b
        return p * (A.T @ (np.abs(r) ** (p - 2.0) * r))

    def hessian(x):
        r = A @ x - b
        w = np.abs(r) ** (p - 2.0)
        return p * (p - 1.0) * (A.T * w) @ A

    return Objective(dim=inst.d, value=value, gradient=gradient, hessian=hessian)


def _log1p_sqnorm(xs) -> float:
    # log(1 + ||xs||^2) without overflowing the squared norm
    peak = float(np.max(np.abs(xs)))
    if peak == 0.0:
        return 0.0
    nrm = peak * float(np.sqrt(np.sum((xs / peak) ** 2)))
    if nrm > 1e150:
        return 2.0 * np.log(nrm)
    return float(np.log1p(nrm * nrm))


def pnorm_dual_reference(p: float, dim: int) -> DualReference:
    """Quadratic-near-zero, power-q-at-infinity reference for p-norm problems.

    k(x*) = ((||x*||^2 + 1)^(q/2) - 1) / q with q = p / (p - 1).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    q = p / (p - 1.0)

    def value(xs):
        return float(np.expm1(0.5 * q * _log1p_sqnorm(xs)) / q)

    def gradient(xs):
        return xs * float(np.exp(0.5 * (q - 2.0) * _log1p_sqnorm(xs)))

    def hessian(xs):
        lg = _log1p_sqnorm(xs)
        a = float(np.exp(0.5 * (q - 2.0) * lg))
        bcoef = (q - 2.0) * float(np.exp(0.5 * (q - 4.0) * lg))
        return a * np.eye(xs.size) + bcoef * np.outer(xs, xs)

    def conjugate_gradient(y):
        y = np.asarray(y, dtype=float)
        s = float(np.linalg.norm(y))
        if s == 0.0:
            return np.zeros_like(y)
        # invert r -> r (1 + r^2)^((q-2)/2), strictly increasing for q > 1

        def fun(r):
            return r * float(np.exp(0.5 * (q - 2.0) * _log1p_sqnorm(np.array([r])))) - s

        hi = max(s, s ** (p - 1.0)) + 1.0
        while fun(hi) < 0.0:
            hi *= 2.0
        r = scipy.optimize.brentq(fun, 0.0, hi, xtol=1e-300, rtol=8.9e-16)
        return (r / s) * y

    return DualReference(
        dim=dim,
        value=value,
        gradient=gradient,
        hessian=hessian,
        conjugate_gradient=conjugate_gradient,
        min_value=0.0,
    )


def power_dual_reference(p: float, dim: int) -> DualReference:
    """Pure power reference k(x*) = ||x*||^q / q with q = p / (p - 1).

    Matches the degenerate tail of consistent (zero-residual) power
    objectives at the cost of a singular Hessian at the origin; the hybrid
    ``pnorm_dual_reference`` is the right choice for nonzero residuals.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    q = p / (p - 1.0)

    def value(xs):
        return float(np.linalg.norm(xs) ** q / q)

    def gradient(xs):
        n = float(np.linalg.norm(xs))
        if n == 0.0:
            return np.zeros_like(xs)
        return n ** (q - 2.0) * xs

    def hessian(xs):
        n = float(np.linalg.norm(xs))
        if n == 0.0:
            raise DomainError("reference Hessian is singular at the origin")
        u = xs / n
        return n ** (q - 2.0) * (np.eye(xs.size) + (q - 2.0) * np.outer(u, u))

    def conjugate_gradient(y):
        y = np.asarray(y, dtype=float)
        n = float(np.linalg.norm(y))
        if n == 0.0:
            return np.zeros_like(y)
        return n ** (p - 2.0) * y

    return DualReference(
        dim=dim,
        value=value,
        gradient=gradient,
        hessian=hessian,
        conjugate_gradient=conjugate_gradient,
        min_value=0.0,
    )


# ---------------------------------------------------------------------------
# exponential penalty relaxation of a linear program
# ---------------------------------------------------------------------------


def exp_penalty_objective(inst: ProblemInstance) -> Objective:
    """f(x) = c.x + tau * sum_i exp((A_i x - b_i) / tau)."""
    if inst.kind != "exp_penalty":
        raise ValueError("expected an exp_penalty instance")
    A, b, c, tau = inst.A, inst.b, inst.c, float(inst.tau)

    def exponents(x):
        e = (A @ x - b) / tau
        if np.max(e) > _EXP_LIMIT:
            raise NumericalRangeError(
                f"exp_penalty exponent {np.max(e):.3g} exceeds {_EXP_LIMIT:g}"
            )
        return e

    def in_domain(x):
        return bool(np.max((A @ x - b) / tau) <= _EXP_LIMIT)

    def value(x):
        return float(c @ x + tau * np.sum(np.exp(exponents(x))))

    def gradient(x):
        return c + A.T @ np.exp(exponents(x))

    def hessian(x):
        w = np.exp(exponents(x)) / tau
        return (A.T * w) @ A

    return Objective(
        dim=inst.d, value=value, gradient=gradient, hessian=hessian, in_domain=in_domain
    )


def exp_penalty_dual_reference(dim: int) -> DualReference:
    """k(x*) = ||x*|| - log(||x*|| + 1): quadratic near 0, linear at infinity."""

    def value(xs):
        r = float(np.linalg.norm(xs))
        return r - np.log1p(r)

    def gradient(xs):
        r = float(np.linalg.norm(xs))
        return xs / (r + 1.0)

    def hessian(xs):
        r = float(np.linalg.norm(xs))
        if r == 0.0:
            return np.eye(xs.size)  # continuous extension at the origin
        return np.eye(xs.size) / (r + 1.0) - np.outer(xs, xs) / ((r + 1.0) ** 2 * r)

    def conjugate_gradient(y):
        y = np.asarray(y, dtype=float)
        s = float(np.linalg.norm(y))
        if s >= 1.0:
            raise DomainError("conjugate gradient defined only for ||y|| < 1")
        return y / (1.0 - s)

    return DualReference(
        dim=dim,
        value=value,
        gradient=gradient,
        hessian=hessian,
        conjugate_gradient=conjugate_gradient,
        min_value=0.0,
    )


# ---------------------------------------------------------------------------
# quadratic (linear left-preconditioning)
# ---------------------------------------------------------------------------


def quadratic_problem(A: Array, b: Array, P: Array) -> Tuple[Objective, DualReference]:
    """f(x) = x.A.x/2 - b.x with reference k(x*) = x*.P^{-1}.x*/2."""
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.allclose(A, A.T) and np.allclose(P, P.T)):
        raise ValueError("A and P must be symmetric")
    try:
        cA = scipy.linalg.cho_factor(A)
        cP = scipy.linalg.cho_factor(P)
    except np.linalg.LinAlgError as exc:
        raise ValueError("A and P must be symmetric positive definite") from exc
    d = b.size
    x_min = scipy.linalg.cho_solve(cA, b)

    f = Objective(
        dim=d,
        value=lambda x: float(0.5 * x @ (A @ x) - b @ x),
        gradient=lambda x: A @ x - b,
        hessian=lambda x: A,
        reference_min=(x_min, float(0.5 * x_min @ (A @ x_min) - b @ x_min)),
    )
    Pinv = scipy.linalg.cho_solve(cP, np.eye(d))
    k = DualReference(
        dim=d,
        value=lambda xs: float(0.5 * xs @ (Pinv @ xs)),
        gradient=lambda xs: Pinv @ xs,
        hessian=lambda xs: Pinv,
        conjugate_gradient=lambda y: P @ y,
        min_value=0.0,
    )
    return f, k


# ---------------------------------------------------------------------------
# 1-d shifted power family
# ---------------------------------------------------------------------------


def power1d_problem(b: float, p: float) -> Tuple[Objective, DualReference]:
    """f(x) = |x - b|^p / p with k(x*) = |x*|^q / q; exact unit dual constants."""
    if p < 2:
        raise ValueError("p must be >= 2")
    q = p / (p - 1.0)
    b = float(b)

    def fval(x):
        return float(np.abs(x[0] - b) ** p / p)

    def fgrad(x):
        u = x[0] - b
        return np.array([np.abs(u) ** (p - 1.0) * np.sign(u)])

    def fhess(x):
        u = x[0] - b
        return np.array([[(p - 1.0) * np.abs(u) ** (p - 2.0)]])

    f = Objective(
        dim=1,
        value=fval,
        gradient=fgrad,
        hessian=fhess,
        reference_min=(np.array([b]), 0.0),
    )

    def kval(xs):
        return float(np.abs(xs[0]) ** q / q)

    def kgrad(xs):
        u = xs[0]
        if q == 4.0 / 3.0:
            # correctly rounded cube root; generic powering loses the last ulp
            return np.array([float(np.cbrt(u))])
        return np.array([np.abs(u) ** (q - 1.0) * np.sign(u)])

    def khess(xs):
        u = xs[0]
        if u == 0.0 and q < 2.0:
            raise DomainError("reference Hessian is singular at the origin")
        return np.array([[(q - 1.0) * np.abs(u) ** (q - 2.0)]])

    def kconj(y):
        u = y[0]
        return np.array([np.abs(u) ** (p - 1.0) * np.sign(u)])

    k = DualReference(
        dim=1,
        value=kval,
        gradient=kgrad,
        hessian=khess,
        conjugate_gradient=kconj,
        min_value=0.0,
    )
    return f, k


# ---------------------------------------------------------------------------
# instance generation, translation, serialization
# ---------------------------------------------------------------------------


def generate_random_instance(
    kind: str,
    d: int,
    n: Optional[int] = None,
    p: Optional[float] = None,
    tau: Optional[float] = None,
    seed: int = 0,
) -> ProblemInstance:
    """Deterministic instance from a seeded 64-bit generator.

    pnorm: standard normal A (n x d) and b. exp_penalty: the axis-aligned
    unit box (rows +-e_j, b = 1, c = e_1), with analytic inradius 1 and
    circumradius sqrt(d).
    """
    if d < 1:
        raise ValueError("d must be positive")
    if kind == "pnorm":
        if n is None or n < 1:
            raise ValueError("pnorm requires n >= 1")
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, d))
        b = rng.standard_normal(n)
        return ProblemInstance(kind="pnorm", A=A, b=b, p=p, seed=seed)
    if kind == "exp_penalty":
        eye = np.eye(d)
        A = np.vstack([eye, -eye])
        b = np.ones(2 * d)
        c = eye[0].copy()
        return ProblemInstance(
            kind="exp_penalty", A=A, b=b, c=c, tau=tau, seed=seed, box=True
        )
    raise ValueError(f"no random generator for kind {kind!r}")


def box_radii(inst: ProblemInstance) -> Tuple[float, float]:
    """Analytic inradius/circumradius of the axis-aligned box instance."""
    if inst.kind != "exp_penalty" or not inst.box:
        raise ValueError("analytic radii available only for box instances")
    return 1.0, float(np.sqrt(inst.d))


def translated_instance(inst: ProblemInstance, z: Array) -> ProblemInstance:
    """Shift the problem horizontally: b -> b + A z moves the minimizer by z."""
    z = np.asarray(z, dtype=float)
    return ProblemInstance(
        kind=inst.kind,
        A=inst.A.copy(),
        b=inst.b + inst.A @ z,
        c=None if inst.c is None else inst.c.copy(),
        p=inst.p,
        tau=inst.tau,
        seed=inst.seed,
        box=False,
    )


def build_problem(inst: ProblemInstance) -> Tuple[Objective, DualReference]:
    """Objective and matching dual reference for an instance."""
    if inst.kind == "pnorm":
        return pnorm_objective(inst), pnorm_dual_reference(inst.p, inst.d)
    if inst.kind == "exp_penalty":
        return exp_penalty_objective(inst), exp_penalty_dual_reference(inst.d)
    if inst.kind == "power1d":
        return power1d_problem(float(inst.b[0]), float(inst.p))
    if inst.kind == "quadratic":
        return quadratic_problem(inst.A, inst.b, inst.A)
    raise ValueError(f"unknown problem kind {inst.kind!r}")


def write_instance(inst: ProblemInstance, path) -> None:
    doc = {
        "kind": inst.kind,
        "n": inst.n,
        "d": inst.d,
        "A": inst.A.tolist(),
        "b": inst.b.tolist(),
    }
    if inst.p is not None:
        doc["p"] = inst.p
    if inst.tau is not None:
        doc["tau"] = inst.tau
    if inst.c is not None:
        doc["c"] = inst.c.tolist()
    if inst.seed is not None:
        doc["seed"] = inst.seed
    if inst.box:
        doc["box"] = True
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_instance(path) -> ProblemInstance:
    with open(path) as fh:
        doc = json.load(fh)
    return ProblemInstance(
        kind=doc["kind"],
        A=np.array(doc["A"], dtype=float),
        b=np.array(doc["b"], dtype=float),
        c=np.array(doc["c"], dtype=float) if "c" in doc else None,
        p=doc.get("p"),
        tau=doc.get("tau"),
        seed=doc.get("seed"),
        box=doc.get("box", False),
    )
