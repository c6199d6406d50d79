"""Discrete differential operators on the channel grid.

x-derivatives are Fourier collocation (Nyquist mode zeroed). y-derivatives
are second-order finite differences: centered in the interior and either
one-sided three-point at the walls (``bc="one_sided"``) or centered using the
reflected ghost values ``f[-1] = f[1]``, ``f[Ny] = f[Ny-2]`` (``bc="reflect"``).

All operators accept stacked input: the last two axes are (x, y).
"""

from __future__ import annotations

import numpy as np

from .grid import Grid

BOUNDARY_SPECS = ("one_sided", "reflect")


def to_modes(f: np.ndarray) -> np.ndarray:
    return np.fft.rfft(f, axis=-2)


def from_modes(fh: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfft(fh, n=grid.Nx, axis=-2)


def _kcol(grid: Grid) -> np.ndarray:
    return grid.wavenumbers[:, None]


def dx(grid: Grid, f: np.ndarray) -> np.ndarray:
    return from_modes(1j * _kcol(grid) * to_modes(f), grid)


def dxx(grid: Grid, f: np.ndarray) -> np.ndarray:
    return from_modes(-_kcol(grid) ** 2 * to_modes(f), grid)


def _check_bc(bc: str) -> None:
    if bc not in BOUNDARY_SPECS:
        raise ValueError(f"unknown boundary spec {bc!r}; expected one of {BOUNDARY_SPECS}")


def dy(grid: Grid, f: np.ndarray, bc: str = "one_sided") -> np.ndarray:
    _check_bc(bc)
    h = grid.hy
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
    if bc == "one_sided":
        out[..., 0] = (-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
        out[..., -1] = (3 * f[..., -1] - 4 * f[..., -2] + f[..., -3]) / (2 * h)
    else:
        out[..., 0] = 0.0
        out[..., -1] = 0.0
    return out


def dyy(grid: Grid, f: np.ndarray, bc: str = "one_sided") -> np.ndarray:
    _check_bc(bc)
    h2 = grid.hy**2
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - 2 * f[..., 1:-1] + f[..., :-2]) / h2
    if bc == "one_sided":
        out[..., 0] = (2 * f[..., 0] - 5 * f[..., 1] + 4 * f[..., 2] - f[..., 3]) / h2
        out[..., -1] = (2 * f[..., -1] - 5 * f[..., -2] + 4 * f[..., -3] - f[..., -4]) / h2
    else:
        out[..., 0] = 2 * (f[..., 1] - f[..., 0]) / h2
        out[..., -1] = 2 * (f[..., -2] - f[..., -1]) / h2
    return out


def laplacian(grid: Grid, f: np.ndarray, bc: str = "one_sided") -> np.ndarray:
    return dxx(grid, f) + dyy(grid, f, bc)


def grad(grid: Grid, f: np.ndarray, bc: str = "one_sided") -> np.ndarray:
    return np.stack([dx(grid, f), dy(grid, f, bc)])


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Discrete divergence, collocated on interior rows.

    The wall rows carry Dirichlet velocity data rather than the
    incompressibility constraint, so they are returned as zero.
    """
    out = dx(grid, v[0]) + dy(grid, v[1])
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def curl2d(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Scalar curl ``d/dx v2 - d/dy v1``."""
    return dx(grid, v[1]) - dy(grid, v[0])


def advect(grid: Grid, v: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Convective derivative ``v . grad f`` for a scalar or stacked ``f``."""
    return v[0] * dx(grid, f) + v[1] * dy(grid, f)


def velocity_from_streamfunction(grid: Grid, psi: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """``u = (d psi/dy, -d psi/dx)`` with reflected ghosts, so u vanishes on the walls.

    Wall values within ``rtol * max|psi|`` of zero are treated as zero.
    """
    grid.check_scalar(psi)
    wall = max(np.abs(psi[:, 0]).max(), np.abs(psi[:, -1]).max())
    if wall > rtol * max(1.0, np.abs(psi).max()):
        raise ValueError(f"streamfunction must vanish on the walls (max |psi| = {wall:.3e})")
    psi = np.array(psi, dtype=float)
    psi[:, 0] = psi[:, -1] = 0.0
    return np.stack([dy(grid, psi, bc="reflect"), -dx(grid, psi)])
