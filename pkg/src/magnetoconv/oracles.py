"""Dense brute-force references for the Stokes toolbox.

Everything here is assembled in physical space with explicit Kronecker
products and an explicitly summed Fourier differentiation matrix, so it shares
no code path with the FFT/per-mode production solvers. Only small grids
(Ny <= 33) are practical.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sl

from .grid import Grid


def fourier_diff_matrix(grid: Grid, order: int = 1) -> np.ndarray:
    """Dense spectral derivative matrix in x, Nyquist mode dropped."""
    n = grid.Nx
    x = grid.x
    m = np.arange(-n // 2 + 1, n // 2)
    k = 2 * np.pi * m / grid.L
    phase = np.exp(1j * k[None, None, :] * (x[:, None, None] - x[None, :, None]))
    mat = np.sum(((1j * k) ** order) * phase, axis=-1) / n
    return mat.real


def fd_matrix(grid: Grid, order: int, bc: str) -> np.ndarray:
    """Dense y-derivative matrix acting on nodal values (first or second order)."""
    ny, h = grid.Ny, grid.hy
    d = np.zeros((ny, ny))
    for j in range(1, ny - 1):
        if order == 1:
            d[j, j - 1], d[j, j + 1] = -0.5 / h, 0.5 / h
        else:
            d[j, j - 1], d[j, j], d[j, j + 1] = 1 / h**2, -2 / h**2, 1 / h**2
    if bc == "one_sided":
        if order == 1:
            d[0, :3] = np.array([-3, 4, -1]) / (2 * h)
            d[-1, -3:] = np.array([1, -4, 3]) / (2 * h)
        else:
            d[0, :4] = np.array([2, -5, 4, -1]) / h**2
            d[-1, -4:] = np.array([-1, 4, -5, 2]) / h**2
    elif order == 2:  # reflected ghosts
        d[0, :2] = np.array([-2, 2]) / h**2
        d[-1, -2:] = np.array([2, -2]) / h**2
    return d


class DenseChannel:
    def __init__(self, grid: Grid):
        self.grid = grid
        nx, ny = grid.Nx, grid.Ny
        self.Dx = fourier_diff_matrix(grid, 1)
        self.Dxx = fourier_diff_matrix(grid, 2)
        Ix, Iy = np.eye(nx), np.eye(ny)
        interior = np.arange(1, ny - 1)
        self.embed = np.kron(Ix, Iy[:, interior])  # interior psi -> full grid
        self.restrict = self.embed.T
        self.lap_reflect = np.kron(self.Dxx, Iy) + np.kron(Ix, fd_matrix(grid, 2, "reflect"))
        self.lap_one_sided = np.kron(self.Dxx, Iy) + np.kron(Ix, fd_matrix(grid, 2, "one_sided"))
        self.dy_one_sided = np.kron(Ix, fd_matrix(grid, 1, "one_sided"))
        self.dy_reflect = np.kron(Ix, fd_matrix(grid, 1, "reflect"))  # wall rows vanish
        self.dx2d = np.kron(self.Dx, Iy)
        lap_g = self.lap_reflect @ self.embed
        self.N2d = -self.restrict @ lap_g
        self.K2d = self.restrict @ self.lap_one_sided @ lap_g
        q = (-1.0) ** np.arange(nx)
        px = Ix - np.ones((nx, nx)) / nx - np.outer(q, q) / nx
        self.proj = np.kron(px, np.eye(ny - 2))
        self.d2_dirichlet = fd_matrix(grid, 2, "one_sided")[1:-1, 1:-1]

    def _flat(self, f):
        return np.asarray(f).reshape(-1)

    def streamfunction_velocity(self, psi_int, mean_flow):
        grid = self.grid
        psi = self.embed @ psi_int
        u1 = (self.dy_reflect @ psi).reshape(grid.shape)
        u1[:, 1:-1] += mean_flow[None, :]
        u2 = -(self.dx2d @ psi).reshape(grid.shape)
        return np.stack([u1, u2])

    def stokes_solve(self, f: np.ndarray, gamma: float) -> np.ndarray:
        grid = self.grid
        curl = self.dx2d @ self._flat(f[1]) - self.dy_one_sided @ self._flat(f[0])
        rhs = self.proj @ (self.restrict @ curl)
        lhs = (gamma * self.N2d + self.K2d) @ self.proj + (np.eye(len(rhs)) - self.proj)
        psi_int = np.linalg.solve(lhs, rhs)
        fmean = f[0].mean(axis=0)[1:-1]
        n = grid.Ny - 2
        mean_flow = np.linalg.solve(gamma * np.eye(n) - self.d2_dirichlet, fmean)
        return self.streamfunction_velocity(psi_int, mean_flow)

    def streamfunction_of(self, u: np.ndarray):
        """Recover (interior psi, mean flow) from u2 by least squares on -Dx psi = u2."""
        a = -self.dx2d @ self.embed
        psi_int, *_ = np.linalg.lstsq(a, self._flat(u[1]), rcond=None)
        psi_int = self.proj @ psi_int
        return psi_int, u[0].mean(axis=0)[1:-1]

    def semigroup(self, u0: np.ndarray, tau: float) -> np.ndarray:
        psi_int, mean_flow = self.streamfunction_of(u0)
        gen = self.proj @ np.linalg.solve(self.N2d, self.K2d) @ self.proj
        psi_t = sl.expm(-tau * gen) @ psi_int
        mean_t = sl.expm(tau * self.d2_dirichlet) @ mean_flow
        return self.streamfunction_velocity(psi_t, mean_t)

    def stokes_eigenvalues(self) -> np.ndarray:
        """Discrete Stokes spectrum: generalized problem on the psi subspace plus mean flow."""
        ev_mean = np.linalg.eigvalsh(-self.d2_dirichlet)
        n = self.N2d.shape[0]
        basis = sl.orth(self.proj)
        ev_psi = sl.eigh(basis.T @ self.K2d @ basis, basis.T @ self.N2d @ basis, eigvals_only=True)
        assert basis.shape[1] < n
        return np.sort(np.concatenate([ev_mean, ev_psi]))


def dense_stokes_solve(grid: Grid, f: np.ndarray, gamma: float = 0.0) -> np.ndarray:
    return DenseChannel(grid).stokes_solve(f, gamma)


def expm_semigroup(grid: Grid, u0: np.ndarray, tau: float) -> np.ndarray:
    return DenseChannel(grid).semigroup(u0, tau)


def smallest_stokes_eigenvalue(grid: Grid) -> float:
    return float(DenseChannel(grid).stokes_eigenvalues()[0])
