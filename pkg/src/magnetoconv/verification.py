"""Oracle and property checks shared by the ``verify`` command and the test suite."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import norms, oracles, stokes
from . import operators as ops
from .dynamics import MODELS, ModelParams, build_initial, run_model
from .grid import make_grid


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def manufactured_stokes(Nx: int, Ny: int, L: float = 2.0):
    """Exact no-slip velocity and its forcing ``-Laplacian u`` (zero pressure).

    Streamfunction ``sin(kx) sin^2(pi y)`` plus the mean shear ``(sin(pi y), 0)``.
    """
    g = make_grid(Nx, Ny, L)
    X, Y = g.mesh
    k = 2 * np.pi / L
    s = np.sin(np.pi * Y) ** 2
    s1 = np.pi * np.sin(2 * np.pi * Y)
    s2 = 2 * np.pi**2 * np.cos(2 * np.pi * Y)
    s3 = -4 * np.pi**3 * np.sin(2 * np.pi * Y)
    mean = np.sin(np.pi * Y)
    u = np.stack([np.sin(k * X) * s1 + mean, -k * np.cos(k * X) * s])
    f = -np.stack([np.sin(k * X) * (s3 - k * k * s1) - np.pi**2 * mean, -k * np.cos(k * X) * (s2 - k * k * s)])
    return g, u, f


def stokes_refinement(Ny_list=(17, 33, 65, 129), Nx: int = 16) -> tuple[list, float]:
    """Relative L2 errors of the steady Stokes solve and their fitted slope in ``hy``."""
    errs, hs = [], []
    for Ny in Ny_list:
        g, ue, f = manufactured_stokes(Nx, Ny)
        us = stokes.solve_generalized_stokes(f, 0.0, stokes.make_workspace(g, 0.0))
        errs.append(norms.norm(g, us - ue) / norms.norm(g, ue))
        hs.append(g.hy)
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return errs, slope


def oracle_velocity(grid) -> np.ndarray:
    """Smooth divergence-free no-slip field with two Fourier modes and a mean shear."""
    X, Y = grid.mesh
    k = 2 * np.pi / grid.L
    psi = 0.1 * np.sin(k * X) * np.sin(np.pi * Y) ** 2 + 0.05 * np.cos(2 * k * X) * np.sin(2 * np.pi * Y) ** 2
    u = ops.velocity_from_streamfunction(grid, psi)
    u[0] += 0.1 * np.sin(np.pi * Y)
    return u


def check_stokes(Ny_list=(17, 33, 65, 129)) -> list[Check]:
    errs, slope = stokes_refinement(Ny_list)
    g = make_grid(16, 17)
    f = np.random.default_rng(1).standard_normal((2, 16, 17))
    worst = 0.0
    for gamma in (0.0, 3.0):
        a = stokes.solve_generalized_stokes(f, gamma, stokes.make_workspace(g, gamma))
        b = oracles.dense_stokes_solve(g, f, gamma)
        worst = max(worst, float(np.abs(a - b).max() / np.abs(b).max()))
    return [
        Check("stokes refinement slope", abs(slope - 2.0) <= 0.2,
              f"slope {slope:.3f}, errors " + ", ".join(f"{e:.3e}" for e in errs)),
        Check("stokes dense oracle 16x17", worst <= 1e-9, f"max relative difference {worst:.2e}"),
    ]


def check_semigroup(taus=(0.1, 0.5, 1.0), cap: float = stokes.DEFAULT_SUBSTEP_CAP) -> list[Check]:
    g = make_grid(16, 17)
    u0 = oracle_velocity(g)
    worst = 0.0
    for tau in taus:
        a = stokes.semigroup_apply(g, u0, tau, cap)
        b = oracles.expm_semigroup(g, u0, tau)
        worst = max(worst, norms.norm(g, a - b) / norms.norm(g, b))
    g = make_grid(32, 33)
    lam = stokes.estimate_slowest_decay(g)
    u0 = oracle_velocity(g)
    n0 = norms.norm(g, u0)
    decay_ok, monotone = True, True
    for tau in taus:
        ts = np.linspace(0, tau, 11)
        vals = [norms.norm(g, stokes.semigroup_apply(g, u0, t, cap)) for t in ts]
        monotone &= all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        decay_ok &= vals[-1] <= np.exp(-(lam - 0.5) * tau) * n0
    return [
        Check("semigroup vs matrix exponential 16x17", worst <= 1e-5, f"max relative L2 difference {worst:.2e}"),
        Check("slowest decay rate", 9 <= lam <= 12, f"lambda_1 = {lam:.4f}"),
        Check("semigroup decay", bool(decay_ok and monotone),
              f"nonincreasing={monotone}, below exp(-(lambda_1-0.5) tau)={decay_ok}"),
    ]


def fixed_point_drift(model: str, nsteps: int = 500, dt: float = 1e-3, Nx: int = 32, Ny: int = 33) -> float:
    """Largest change of any diagnostic norm along a run started from the conduction state."""
    base = ModelParams(Nx=Nx, Ny=Ny, dt=dt, T=nsteps * dt, model=model)
    params = replace(base, ic=replace(base.ic, name="conduction"))
    traj = run_model(params, snapshot_times=[0.0, params.T])
    d0 = traj.diagnostics[0]
    return max(abs(d[k] - d0[k]) for d in traj.diagnostics for k in d0 if k != "time")


def check_fixed_point(nsteps: int = 500) -> list[Check]:
    out = []
    for model in MODELS:
        drift = fixed_point_drift(model, nsteps)
        out.append(Check(f"conduction fixed point ({model})", drift <= 1e-10, f"max norm drift {drift:.2e}"))
    return out


def max_principle_bound(params: ModelParams) -> float:
    """``max(1, |theta0|_inf)``, the bound the temperature must respect."""
    theta0 = build_initial(params.ic, params.grid).theta
    return max(1.0, float(np.abs(theta0).max()))


def check_max_principle(params: ModelParams) -> Check:
    traj = run_model(params, snapshot_times=[0.0, params.T])
    peak = max(d["theta_Linf"] for d in traj.diagnostics)
    bound = max_principle_bound(params)
    return Check(f"temperature maximum principle ({params.model})", peak <= bound + 1e-8,
                 f"sup |theta| = {peak:.12f}, bound {bound:.12f}")


def run_all(params: ModelParams) -> list[Check]:
    return check_stokes() + check_semigroup() + check_fixed_point() + [check_max_principle(params)]
