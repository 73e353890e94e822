"""Objective / dual-reference abstractions and Bregman divergence machinery.

Everything here is pure: the function objects are immutable containers of
callables and can be shared freely across threads.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


class DomainError(ValueError):
    """Evaluation point lies outside the function's domain."""


class NumericalRangeError(DomainError):
    """Evaluation would overflow double precision (e.g. huge exponents)."""


Array = np.ndarray


def _all_of_rd(x: Array) -> bool:
    return True


@dataclass(frozen=True)
class Objective:
    """A convex objective: value, gradient, optional Hessian, domain test.

    ``reference_min`` optionally carries (x_min, f_min) when the minimizer is
    known in closed form, for bound verification.
    """

    dim: int
    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    hessian: Optional[Callable[[Array], Array]] = None
    in_domain: Callable[[Array], bool] = _all_of_rd
    reference_min: Optional[Tuple[Array, float]] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


@dataclass(frozen=True)
class DualReference:
    """A Legendre function minimized at the origin, acting on gradients.

    ``min_value`` is the value at 0 and is read once by the solver instead of
    being recomputed, to avoid cancellation noise in the monitored gap.
    ``conjugate_gradient``, when available, inverts the gradient map.
    """

    dim: int
    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    hessian: Optional[Callable[[Array], Array]] = None
    conjugate_gradient: Optional[Callable[[Array], Array]] = None
    min_value: float = 0.0
    in_domain: Callable[[Array], bool] = _all_of_rd

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


def _value_fn(fn) -> Callable[[Array], float]:
    return fn.value if hasattr(fn, "value") else fn


def bregman_divergence(fn, x: Array, y: Array) -> float:
    """D(x, y) = fn(x) - fn(y) - <grad fn(y), x - y>.

    Both points must be interior points of the domain of ``fn``; the
    divergence of a convex function is nonnegative up to rounding.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (fn.in_domain(x) and fn.in_domain(y)):
        raise DomainError("bregman_divergence: point outside domain")
    return float(fn.value(x) - fn.value(y) - np.dot(fn.gradient(y), x - y))


def finite_diff_gradient(fn, x: Array, h: Optional[float] = None) -> Array:
    """Central-difference gradient, componentwise. Test oracle."""
    f = _value_fn(fn)
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(x))
    if h <= 0:
        raise ValueError("h must be positive")
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def finite_diff_hessian(fn, x: Array, h: Optional[float] = None) -> Array:
    """Second-order central-difference Hessian, symmetrized. Test oracle."""
    f = _value_fn(fn)
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-3 * (1.0 + np.linalg.norm(x))
    if h <= 0:
        raise ValueError("h must be positive")
    d = x.size
    H = np.empty((d, d))
    f0 = f(x)
    for j in range(d):
        ej = np.zeros(d)
        ej[j] = h
        H[j, j] = (f(x + ej) - 2.0 * f0 + f(x - ej)) / h**2
        for l in range(j + 1, d):
            el = np.zeros(d)
            el[l] = h
            H[j, l] = (
                f(x + ej + el) - f(x + ej - el) - f(x - ej + el) + f(x - ej - el)
            ) / (4.0 * h**2)
            H[l, j] = H[j, l]
    return 0.5 * (H + H.T)
