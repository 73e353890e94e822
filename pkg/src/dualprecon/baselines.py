"""Reference first-order methods: gradient descent and the mirror step.

Only mirror maps with a closed-form conjugate gradient are supported, so a
mirror step is a single exact evaluation rather than an inner solve.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Array, DomainError, Objective


@dataclass(frozen=True)
class MirrorMap:
    """Strictly convex reference function with invertible gradient map."""

    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    conjugate_gradient: Callable[[Array], Array]


def gd_step(f: Objective, x: Array, L: float) -> Array:
    """Plain gradient step x - (1/L) * grad_f(x)."""
    x = np.asarray(x, dtype=float)
    if not f.in_domain(x):
        raise DomainError("gd_step: x outside domain of f")
    return x - f.gradient(x) / L


def bregman_step(f: Objective, h: MirrorMap, x: Array, L: float) -> Array:
    """Mirror step: map to gradient space, move, map back.

    x+ = grad_h*(grad_h(x) - (1/L) grad_f(x)). With the Euclidean mirror map
    this reduces bitwise to gd_step.
    """
    x = np.asarray(x, dtype=float)
    if not f.in_domain(x):
        raise DomainError("bregman_step: x outside domain of f")
    y = h.gradient(x) - f.gradient(x) / L
    return h.conjugate_gradient(y)


def euclidean_mirror_map() -> MirrorMap:
    """h(x) = ||x||^2 / 2; gradient and its inverse are the identity."""
    return MirrorMap(
        value=lambda x: 0.5 * float(np.dot(x, x)),
        gradient=lambda x: x,
        conjugate_gradient=lambda y: y,
    )


def shifted_power_mirror_map(center: Array, p: float) -> MirrorMap:
    """h(x) = ||x - c||^p / p with closed-form inverse gradient map.

    grad_h(x) = ||x-c||^(p-2) (x-c), grad_h*(y) = c + ||y||^((2-p)/(p-1)) y.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    c = np.asarray(center, dtype=float)

    def value(x):
        return float(np.linalg.norm(x - c) ** p / p)

    def gradient(x):
        v = x - c
        n = np.linalg.norm(v)
        if n == 0.0:
            return np.zeros_like(v)
        return n ** (p - 2.0) * v

    def conjugate_gradient(y):
        y = np.asarray(y, dtype=float)
        n = np.linalg.norm(y)
        if n == 0.0:
            return c.copy()
        return c + n ** ((2.0 - p) / (p - 1.0)) * y

    return MirrorMap(value=value, gradient=gradient, conjugate_gradient=conjugate_gradient)
