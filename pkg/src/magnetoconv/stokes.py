"""Stokes operator toolbox: generalized Stokes solves, Leray projection, semigroup.

Divergence-free no-slip velocities are represented per Fourier mode in
*modal coordinates* ``c`` of shape ``(nmodes, Ny - 2)`` (interior nodes only):

* row 0 holds the mean horizontal flow ``rfft(u1)[0]``,
* rows ``1 .. Nx/2 - 1`` hold streamfunction coefficients ``rfft(psi)[m]``,
* the Nyquist row is identically zero.

In these coordinates the Stokes problem ``gamma*u + A u = P f`` becomes the
per-mode linear system ``(gamma*N_m + K_m) c_m = r_m`` with
``N_m = -(D2 - k^2)`` (Dirichlet) and ``K_m = (D2 - k^2)^2`` (clamped, via the
reflected ghost). For the mean flow ``N_0 = I`` and ``K_0 = -D2``. The Stokes
operator itself is ``N^{-1} K``, so ``e^{-tA}`` is the flow of ``N c' = -K c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sl

from . import operators as ops
from . import norms
from .grid import Grid

DEFAULT_SUBSTEP_CAP = 1e-2
SEMIGROUP_FLOOR = 1e-14

# (2,3) Pade approximant of exp(-z): fourth order and L-stable.
_PADE_NUM = (1.0, -2.0 / 5.0, 1.0 / 20.0)
_PADE_DEN = (1.0, 3.0 / 5.0, 3.0 / 20.0, 1.0 / 60.0)


def _second_difference(n: int, h: float) -> np.ndarray:
    return (
        np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    ) / h**2


def _clamped_biharmonic(n: int, h: float, k: float) -> np.ndarray:
    """(D2 - k^2)^2 on interior nodes with psi = 0 and reflected ghosts at the walls."""
    ny = n + 2
    lift = np.zeros((ny, n))
    lift[1:-1] = _second_difference(n, h) - k * k * np.eye(n)
    lift[0, 0] = 2.0 / h**2
    lift[-1, -1] = 2.0 / h**2
    restrict = np.zeros((n, ny))
    idx = np.arange(n)
    restrict[idx, idx] = 1.0 / h**2
    restrict[idx, idx + 1] = -2.0 / h**2 - k * k
    restrict[idx, idx + 2] = 1.0 / h**2
    return restrict @ lift


def _wide_laplacian(grid: Grid, k: float) -> np.ndarray:
    """k^2 - D1 D1 on interior nodes, D1 one-sided at walls and chi = 0 there."""
    ny = grid.Ny
    d1 = ops.dy(grid, np.eye(ny))  # columns are derivatives of unit vectors
    d1 = d1.T  # row j: coefficients of d/dy at node j
    d1d1 = d1 @ d1
    return k * k * np.eye(ny - 2) - d1d1[1:-1, 1:-1]


class ModalStokes:
    """Per-grid modal matrices plus cached semigroup propagators."""

    def __init__(self, grid: Grid):
        self.grid = grid
        n = grid.Ny - 2
        h = grid.hy
        nm = grid.nmodes
        d2 = _second_difference(n, h)
        eye = np.eye(n)
        self.N = np.empty((nm, n, n))
        self.K = np.empty((nm, n, n))
        self.N[0] = eye
        self.K[0] = -d2
        for m in range(1, nm - 1):
            k = grid.wavenumbers[m]
            self.N[m] = k * k * eye - d2
            self.K[m] = _clamped_biharmonic(n, h, k)
        self.N[-1] = eye
        self.K[-1] = eye
        self.mask = np.ones((nm, 1))
        self.mask[-1] = 0.0
        self.generator = np.linalg.solve(self.N, self.K)  # N^{-1} K per mode
        self._propagators: dict[float, np.ndarray] = {}
        self._wide: np.ndarray | None = None

    # -- coordinates -----------------------------------------------------
    def to_modes(self, u: np.ndarray) -> np.ndarray:
        grid = self.grid
        grid.check_vector(u)
        uh = ops.to_modes(u)
        c = np.zeros((grid.nmodes, grid.Ny - 2), dtype=complex)
        c[0] = uh[0, 0, 1:-1]
        k = grid.wavenumbers[1:-1, None]
        c[1:-1] = 1j * uh[1, 1:-1, 1:-1] / k
        return c

    def to_velocity(self, c: np.ndarray) -> np.ndarray:
        grid = self.grid
        psi_h = np.zeros((grid.nmodes, grid.Ny), dtype=complex)
        psi_h[1:-1, 1:-1] = c[1:-1]
        u1h = ops.dy(grid, psi_h.real, bc="reflect") + 1j * ops.dy(grid, psi_h.imag, bc="reflect")
        u1h[0, 1:-1] = c[0]
        u2h = -1j * grid.wavenumbers[:, None] * psi_h
        return ops.from_modes(np.stack([u1h, u2h]), grid)

    def forcing_modes(self, f: np.ndarray) -> np.ndarray:
        """Right-hand side ``r`` of the modal Stokes system for a body force ``f``."""
        grid = self.grid
        grid.check_vector(f)
        r = np.zeros((grid.nmodes, grid.Ny - 2), dtype=complex)
        r[1:-1] = ops.to_modes(ops.curl2d(grid, f))[1:-1, 1:-1]
        r[0] = ops.to_modes(f[0])[0, 1:-1]
        return r

    # -- linear algebra ----------------------------------------------------
    def apply(self, c: np.ndarray) -> np.ndarray:
        return np.einsum("mij,mj->mi", self.generator, c) * self.mask

    def energy(self, c: np.ndarray) -> float:
        nc = np.einsum("mij,mj->mi", self.N, c)
        return float(np.real(np.sum(np.conj(c) * nc)))

    def propagator(self, dtau: float) -> np.ndarray:
        prop = self._propagators.get(dtau)
        if prop is None:
            z = dtau * self.generator
            eye = np.broadcast_to(np.eye(z.shape[-1]), z.shape)
            powers = [eye, z, z @ z, z @ z @ z]
            num = sum(a * p for a, p in zip(_PADE_NUM, powers))
            den = sum(b * p for b, p in zip(_PADE_DEN, powers))
            prop = np.linalg.solve(den, num)
            prop[-1] = 0.0
            self._propagators[dtau] = prop
        return prop

    def evolve(self, c: np.ndarray, tau: float, substep_cap: float = DEFAULT_SUBSTEP_CAP) -> np.ndarray:
        if tau < 0:
            raise ValueError("tau must be non-negative")
        if tau == 0:
            return c.copy()
        nsub = max(1, math.ceil(tau / substep_cap - 1e-9))
        prop = self.propagator(tau / nsub)
        e0 = self.energy(c)
        if e0 == 0.0:
            return np.zeros_like(c)
        floor = SEMIGROUP_FLOOR**2 * e0
        out = c
        for _ in range(nsub):
            out = np.einsum("mij,mj->mi", prop, out)
            if self.energy(out) < floor:
                return np.zeros_like(c)
        return out

    def average(self, c: np.ndarray, tau: float, substep_cap: float = DEFAULT_SUBSTEP_CAP) -> np.ndarray:
        """Time average ``(1/tau) int_0^tau e^{-sA} c ds = (tau A)^{-1} (c - e^{-tau A} c)``."""
        if tau == 0:
            return c.copy()
        diff = c - self.evolve(c, tau, substep_cap)
        nd = np.einsum("mij,mj->mi", self.N, diff)
        return make_workspace(self.grid, 0.0).solve_modes(nd) / tau

    def wide_laplacians(self) -> np.ndarray:
        if self._wide is None:
            grid = self.grid
            nm = grid.nmodes
            w = np.empty((nm, grid.Ny - 2, grid.Ny - 2))
            for m in range(nm):
                w[m] = _wide_laplacian(grid, grid.wavenumbers[m])
            self._wide = w
        return self._wide


@lru_cache(maxsize=16)
def modal_stokes(grid: Grid) -> ModalStokes:
    return ModalStokes(grid)


@dataclass(frozen=True)
class StokesWorkspace:
    """Factored per-mode systems ``gamma*N + K`` for one (grid, gamma) pair."""

    grid: Grid
    gamma: float
    modal: ModalStokes = field(repr=False, compare=False)
    lu: tuple = field(repr=False, compare=False)

    def solve_modes(self, r: np.ndarray) -> np.ndarray:
        out = np.zeros_like(r)
        for m, fac in enumerate(self.lu):
            if fac is not None:
                out[m] = sl.lu_solve(fac, r[m])
        return out


@lru_cache(maxsize=64)
def make_workspace(grid: Grid, gamma: float = 0.0) -> StokesWorkspace:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    modal = modal_stokes(grid)
    factors = []
    for m in range(grid.nmodes):
        if m == grid.nmodes - 1:
            factors.append(None)
            continue
        mat = gamma * modal.N[m] + modal.K[m]
        lu, piv = sl.lu_factor(mat, check_finite=True)
        if np.min(np.abs(np.diag(lu))) == 0.0:
            raise np.linalg.LinAlgError(f"singular Stokes system in mode {m}")
        factors.append((lu, piv))
    return StokesWorkspace(grid, float(gamma), modal, tuple(factors))


def solve_generalized_stokes(f: np.ndarray, gamma: float, ws: StokesWorkspace) -> np.ndarray:
    """Velocity solving ``gamma*u - lap u + grad p = f``, ``div u = 0``, ``u = 0`` on walls."""
    if float(gamma) != ws.gamma:
        raise ValueError(f"workspace was built for gamma={ws.gamma}, not {gamma}")
    ws.grid.check_vector(f)
    modal = ws.modal
    c = ws.solve_modes(modal.forcing_modes(f))
    return modal.to_velocity(c)


def leray_project(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Orthogonal-complement-of-gradients projection with zero normal trace.

    Each non-mean mode is rebuilt from a stream function ``chi`` (``chi = 0``
    on the walls) whose discrete curl matches that of ``f``; the mean
    horizontal flow is kept and the mean vertical flow dropped. Because
    ``curl2d`` annihilates ``grad`` exactly, the result is an exact discrete
    projector.
    """
    grid.check_vector(f)
    modal = modal_stokes(grid)
    wide = modal.wide_laplacians()
    curl_h = ops.to_modes(ops.curl2d(grid, f))
    chi_h = np.zeros((grid.nmodes, grid.Ny), dtype=complex)
    chi_h[1:-1, 1:-1] = np.linalg.solve(wide[1:-1], curl_h[1:-1, 1:-1, None])[..., 0]
    chi = ops.from_modes(chi_h, grid)
    out = np.stack([ops.dy(grid, chi), -ops.dx(grid, chi)])
    out[0] += ops.to_modes(f[0])[0].real / grid.Nx
    return out


def semigroup_apply(
    grid: Grid, u0: np.ndarray, tau: float, substep_cap: float = DEFAULT_SUBSTEP_CAP
) -> np.ndarray:
    """``e^{-tau A} u0`` for a divergence-free no-slip field."""
    modal = modal_stokes(grid)
    return modal.to_velocity(modal.evolve(modal.to_modes(u0), tau, substep_cap))


def stokes_apply(grid: Grid, u: np.ndarray) -> np.ndarray:
    return leray_project(grid, -ops.laplacian(grid, u))


def inverse_stokes(grid: Grid, f: np.ndarray) -> np.ndarray:
    """``A^{-1} P f``."""
    return solve_generalized_stokes(f, 0.0, make_workspace(grid, 0.0))


def _power_start(grid: Grid) -> np.ndarray:
    X, Y = grid.mesh
    kx = 2 * np.pi / grid.L
    psi = (np.sin(kx * X) + 0.5 * np.cos(2 * kx * X + 0.3)) * np.sin(np.pi * Y) ** 2
    u = ops.velocity_from_streamfunction(grid, psi)
    u[0] += Y * (1 - Y) * (1 + Y)
    return u


def estimate_slowest_decay(grid: Grid, iterations: int = 200, rtol: float = 1e-10) -> float:
    """Smallest discrete Stokes eigenvalue by inverse power iteration."""
    ws = make_workspace(grid, 0.0)
    v = _power_start(grid)
    v /= norms.norm(grid, v)
    lam_old = np.inf
    for _ in range(iterations):
        w = solve_generalized_stokes(v, 0.0, ws)
        nw = norms.norm(grid, w)
        lam = 1.0 / nw
        v = w / nw
        if abs(lam - lam_old) <= rtol * lam:
            if not lam > 0:
                raise ArithmeticError(f"non-positive Stokes eigenvalue estimate {lam}")
            return float(lam)
        lam_old = lam
    raise RuntimeError(f"inverse power iteration did not converge in {iterations} iterations")
