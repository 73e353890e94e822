"""Dual-space preconditioned gradient descent with fixed and adaptive steps.

The iteration is x_{i+1} = x_i - (1/L) * grad_k(grad_f(x_i)). Three rules
for the inverse step size L are provided:

* ``fixed``     constant L.
* ``doubling``  L is multiplied by 2 whenever the candidate step would
                increase f or leave the domain; it is never decreased.
* ``adaptive``  L_i = min{2^r over the bounded range} such that the candidate
                stays in the domain, the monitored gap k(grad f) does not
                increase, and the gap is bounded by L_i times the decrease
                in f. The search starts at the previous L, halving while the
                conditions still hold and doubling otherwise.
"""

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import Array, DomainError, DualReference, Objective


class NumericsError(ArithmeticError):
    """Non-finite value or gradient encountered during a solve."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


_STEP_RULES = ("fixed", "doubling", "adaptive")


@dataclass
class SolverConfig:
    step_rule: str = "adaptive"
    L0: float = 1.0
    max_iters: int = 10000
    tol_kgap: float = 1e-12
    tol_grad: float = 0.0
    r_bounds: Tuple[int, int] = (-60, 60)
    store_iterates: bool = False

    def __post_init__(self):
        if self.step_rule not in _STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not self.L0 > 0:
            raise ValueError("L0 must be strictly positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol_kgap < 0 or self.tol_grad < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.r_bounds[0] > self.r_bounds[1]:
            raise ValueError("r_bounds must be a nonempty integer range")


@dataclass
class IterateRecord:
    i: int
    f_val: float
    k_gap: float
    grad_norm: float
    L_star: float
    grad_evals: int
    wall_ms: float
    x: Optional[Array] = None


@dataclass
class IterateTrace:
    records: List[IterateRecord] = field(default_factory=list)
    termination_reason: str = ""

    def __len__(self):
        return len(self.records)

    def k_gaps(self) -> np.ndarray:
        return np.array([r.k_gap for r in self.records])

    def f_vals(self) -> np.ndarray:
        return np.array([r.f_val for r in self.records])

    def L_stars(self) -> np.ndarray:
        return np.array([r.L_star for r in self.records])

    def grad_eval_counts(self) -> np.ndarray:
        return np.array([r.grad_evals for r in self.records])


def dual_precon_step(f: Objective, k: DualReference, x: Array, L_star: float) -> Array:
    """One preconditioned step x - (1/L) * grad_k(grad_f(x)).

    Domain membership of the *result* is not checked here; the solve driver
    is responsible for that.
    """
    x = np.asarray(x, dtype=float)
    if not f.in_domain(x):
        raise DomainError("dual_precon_step: x outside domain of f")
    g = f.gradient(x)
    if not k.in_domain(g):
        raise DomainError("dual_precon_step: grad_f(x) outside domain of k")
    return x - k.gradient(g) / L_star


def _eval_point(f: Objective, k: DualReference, x: Array, i: int):
    """f, grad_f, k(grad_f) at x; raises on non-finite values."""
    fx = f.value(x)
    g = f.gradient(x)
    kg = k.value(g)
    if not (np.isfinite(fx) and np.all(np.isfinite(g)) and np.isfinite(kg)):
        raise NumericsError("non-finite objective or gradient", i)
    return fx, g, kg


def solve(f: Objective, k: DualReference, x0: Array, cfg: SolverConfig) -> IterateTrace:
    """Run the preconditioned iteration from x0 under the configured rule."""
    x = np.array(x0, dtype=float)
    if not f.in_domain(x):
        raise DomainError("solve: x0 outside domain of f")

    k0 = k.min_value
    r_min, r_max = cfg.r_bounds
    t0 = time.perf_counter()
    trace = IterateTrace()

    fx, g, kg = _eval_point(f, k, x, 0)
    grad_evals = 1
    L = float(cfg.L0)
    r = int(np.clip(round(np.log2(L)), r_min, r_max)) if cfg.step_rule == "adaptive" else 0
    if cfg.step_rule == "adaptive":
        L = 2.0**r

    def record(i, reason=None):
        trace.records.append(
            IterateRecord(
                i=i,
                f_val=fx,
                k_gap=kg - k0,
                grad_norm=float(np.linalg.norm(g)),
                L_star=L,
                grad_evals=grad_evals,
                wall_ms=(time.perf_counter() - t0) * 1e3,
                x=x.copy() if cfg.store_iterates else None,
            )
        )
        if reason is not None:
            trace.termination_reason = reason

    i = 0
    while True:
        kgap = kg - k0
        if kgap <= cfg.tol_kgap:
            record(i, "kgap_tol")
            break
        if cfg.tol_grad > 0 and np.linalg.norm(g) <= cfg.tol_grad:
            record(i, "grad_tol")
            break
        if i >= cfg.max_iters:
            record(i, "max_iters")
            break

        direction = k.gradient(g)
        slack = 1e-12 * (1.0 + abs(kgap))

        if cfg.step_rule == "fixed":
            x_new = x - direction / L
            if not f.in_domain(x_new):
                raise DomainError(f"fixed-step iterate left the domain at iteration {i}")
            fx_new, g_new, kg_new = _eval_point(f, k, x_new, i + 1)
            grad_evals += 1
            accepted = (x_new, fx_new, g_new, kg_new)

        elif cfg.step_rule == "doubling":
            accepted = None
            f_slack = 1e-12 * (1.0 + abs(fx))
            while True:
                x_new = x - direction / L
                if f.in_domain(x_new):
                    f_try = f.value(x_new)
                    # Tolerate rounding noise in the f comparison: near the
                    # optimum the true decrease drops below eps * |f| and a
                    # strict test would double L forever. The monitored gap
                    # is checked as well so that it stays monotone even once
                    # f changes are pure rounding noise.
                    if np.isfinite(f_try) and f_try <= fx + f_slack:
                        g_new = f.gradient(x_new)
                        kg_new = k.value(g_new)
                        grad_evals += 1
                        if not (np.all(np.isfinite(g_new)) and np.isfinite(kg_new)):
                            raise NumericsError("non-finite gradient", i + 1)
                        if kg_new <= kg + slack:
                            accepted = (x_new, f_try, g_new, kg_new)
                            break
                L = 2.0 * L
                if L > 2.0**r_max:
                    break
            if accepted is None:
                record(i, "step_search_exhausted")
                break

        else:  # adaptive
            def try_r(r_try):
                nonlocal grad_evals
                L_try = 2.0**r_try
                x_new = x - direction / L_try
                if not f.in_domain(x_new):
                    return None
                fx_new = f.value(x_new)
                g_new = f.gradient(x_new)
                kg_new = k.value(g_new)
                grad_evals += 1
                if not (
                    np.isfinite(fx_new)
                    and np.all(np.isfinite(g_new))
                    and np.isfinite(kg_new)
                ):
                    return None
                if kg_new > kg + slack:
                    return None
                if kg_new - k0 > L_try * (fx - fx_new) + slack:
                    return None
                return (x_new, fx_new, g_new, kg_new)

            accepted = try_r(r)
            if accepted is not None:
                while r - 1 >= r_min:
                    lower = try_r(r - 1)
                    if lower is None:
                        break
                    r -= 1
                    accepted = lower
            else:
                while r + 1 <= r_max:
                    r += 1
                    accepted = try_r(r)
                    if accepted is not None:
                        break
            if accepted is None:
                L = 2.0**r
                record(i, "step_search_exhausted")
                break
            L = 2.0**r

        record(i)
        x, fx, g, kg = accepted
        i += 1

    return trace


def verify_rate_bounds(
    trace: IterateTrace,
    f_min: float,
    f0: Optional[float] = None,
    mu_star: Optional[float] = None,
    L_star: Optional[float] = None,
    tol: float = 1e-10,
) -> dict:
    """Check the recorded gaps against the sublinear and linear rate bounds.

    Sublinear: k_gap(i) <= (max_{j<i} L_j / i) * (f0 - f_min) + tol for i >= 1.
    Linear (when mu_star is given): f(x_i) - f_min <= (1 - mu*/L*)^i *
    (f0 - f_min) + tol. Returns pass/fail flags with the worst margins, where
    a margin is (bound + tol) - observed, so negative means violated.
    """
    if f_min is None:
        raise ValueError("verify_rate_bounds requires f_min")
    if len(trace) == 0:
        raise ValueError("empty trace")
    if f0 is None:
        f0 = trace.records[0].f_val

    gap0 = f0 - f_min
    Ls = trace.L_stars()
    kgaps = trace.k_gaps()
    fvals = trace.f_vals()

    sub_margin = np.inf
    for i in range(1, len(trace)):
        bound = np.max(Ls[:i]) / i * gap0
        sub_margin = min(sub_margin, bound + tol - kgaps[i])

    report = {
        "sublinear_ok": bool(sub_margin >= 0.0),
        "worst_sublinear_margin": float(sub_margin),
    }

    if mu_star is not None:
        if L_star is None:
            L_star = float(np.max(Ls))
        rate = 1.0 - mu_star / L_star
        lin_margin = np.inf
        for i in range(1, len(trace)):
            bound = rate**i * gap0
            lin_margin = min(lin_margin, bound + tol - (fvals[i] - f_min))
        report["linear_ok"] = bool(lin_margin >= 0.0)
        report["worst_linear_margin"] = float(lin_margin)

    return report
