"""Channel geometry: periodic in x on [0, L), walls at y = 0 and y = 1.

Fields are plain numpy arrays. A scalar field has shape ``(Nx, Ny)`` indexed
``[i, j]`` with ``x_i = i*hx`` and ``y_j = j*hy``; a vector field has shape
``(2, Nx, Ny)`` with the horizontal component first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    Nx: int
    Ny: int
    L: float = 2.0

    def __post_init__(self):
        if int(self.Nx) != self.Nx or self.Nx < 4 or self.Nx % 2:
            raise ValueError(f"Nx must be an even integer >= 4, got {self.Nx}")
        if int(self.Ny) != self.Ny or self.Ny < 5:
            raise ValueError(f"Ny must be an integer >= 5, got {self.Ny}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def hx(self) -> float:
        return self.L / self.Nx

    @property
    def hy(self) -> float:
        return 1.0 / (self.Ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny)

    @property
    def nmodes(self) -> int:
        """Number of non-negative Fourier modes kept by ``rfft`` (incl. Nyquist)."""
        return self.Nx // 2 + 1

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.hx

    @cached_property
    def y(self) -> np.ndarray:
        y = np.arange(self.Ny) * self.hy
        y[-1] = 1.0
        return y

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers ``2*pi*m/L`` for the rfft modes, Nyquist set to 0."""
        k = 2.0 * np.pi * np.arange(self.nmodes) / self.L
        k[-1] = 0.0
        return k

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.Ny, self.hy)
        w[0] = w[-1] = 0.5 * self.hy
        return w

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def zeros_vector(self) -> np.ndarray:
        return np.zeros((2,) + self.shape)

    def check_scalar(self, f: np.ndarray) -> None:
        if np.shape(f) != self.shape:
            raise ValueError(f"expected scalar field of shape {self.shape}, got {np.shape(f)}")

    def check_vector(self, v: np.ndarray) -> None:
        if np.shape(v) != (2,) + self.shape:
            raise ValueError(
                f"expected vector field of shape {(2,) + self.shape}, got {np.shape(v)}"
            )


def make_grid(Nx: int, Ny: int, L: float = 2.0) -> Grid:
    return Grid(Nx, Ny, float(L))
