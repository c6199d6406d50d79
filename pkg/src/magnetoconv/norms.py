"""Discrete Lebesgue and Sobolev norms (uniform rule in x, trapezoid in y)."""

from __future__ import annotations

import numpy as np

from . import operators as ops
from .grid import Grid

NORM_KINDS = ("L2", "H1", "H2", "L4", "Linf")


def integrate(grid: Grid, f: np.ndarray) -> float:
    # fixed reduction order: y first, then x, so results do not depend on threading
    return float(grid.hx * np.sum(f @ grid.trapezoid_weights))


def _components(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return f[None] if f.ndim == 2 else f.reshape(-1, *f.shape[-2:])


def _sumsq(grid: Grid, fields: np.ndarray) -> float:
    return integrate(grid, np.sum(fields**2, axis=0))


def first_derivatives(grid: Grid, f: np.ndarray) -> np.ndarray:
    """All first partials of every component, stacked on axis 0."""
    comps = _components(f)
    return np.concatenate([ops.dx(grid, comps), ops.dy(grid, comps)])


def second_derivatives(grid: Grid, f: np.ndarray) -> np.ndarray:
    comps = _components(f)
    fx = ops.dx(grid, comps)
    fxy = ops.dy(grid, fx)
    return np.concatenate([ops.dxx(grid, comps), fxy, fxy, ops.dyy(grid, comps)])


def norm(grid: Grid, f: np.ndarray, kind: str = "L2") -> float:
    comps = _components(f)
    if kind == "Linf":
        return float(np.abs(comps).max())
    if kind == "L4":
        return integrate(grid, np.sum(comps**2, axis=0) ** 2) ** 0.25
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm {kind!r}; expected one of {NORM_KINDS}")
    total = _sumsq(grid, comps)
    if kind in ("H1", "H2"):
        total += _sumsq(grid, first_derivatives(grid, comps))
    if kind == "H2":
        total += _sumsq(grid, second_derivatives(grid, comps))
    return float(np.sqrt(total))


def grad_h1(grid: Grid, f: np.ndarray) -> float:
    """H1 norm of the gradient, ``sqrt(|grad f|^2 + |grad^2 f|^2)`` in L2."""
    comps = _components(f)
    total = _sumsq(grid, first_derivatives(grid, comps)) + _sumsq(
        grid, second_derivatives(grid, comps)
    )
    return float(np.sqrt(total))


def grad_l4(grid: Grid, f: np.ndarray) -> float:
    """L4 norm of the full gradient tensor (pointwise Frobenius magnitude)."""
    return norm(grid, first_derivatives(grid, f), "L4")


def grad_l2(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(_sumsq(grid, first_derivatives(grid, f))))
