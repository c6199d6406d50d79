"""Time integrators for the finite-Prandtl, infinite-Prandtl and effective models.

All three share the same induction and heat update: implicit diffusion,
explicit transport/stretching/coupling, temperature carried in the lifted
variable ``Theta = theta - (1 - y)`` so the implicit solve has homogeneous
walls. They differ only in how the velocity driving that update is produced:

``limit``      u is slaved: ``u = A^{-1} P F(theta, B)``.
``effective``  u = slaved part + ``e^{-tau A} w0`` with ``tau = t/eps``.
``full``       eps u_t + A u = P(F - eps u.grad u), integrated either with an
               exponential integrator (default) or the first-order IMEX
               scheme ``(eps/dt)(u' - u) + A u' = P G``.

Here ``F = Ra k theta + Pm Q (B.grad B + dB/dy)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from . import norms
from . import operators as ops
from . import stokes
from .grid import Grid

MODELS = ("full", "limit", "effective")
MOMENTUM_SCHEMES = ("exponential", "imex")
DIV_TOL = 1e-10


class SimulationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message if t is None else f"{message} (t = {t:.6g})")


@dataclass(frozen=True)
class ICPreset:
    name: str = "perturbed"
    amp_psi: float = 0.1
    amp_b: float = 0.1
    amp_theta: float = 0.2
    mode: int = 1

    def __post_init__(self):
        if self.name not in ("conduction", "perturbed"):
            raise ValueError(f"unknown initial condition {self.name!r}")
        if abs(self.amp_theta) > 0.5:
            raise ValueError(f"amp_theta must satisfy |amp_theta| <= 0.5, got {self.amp_theta}")
        if int(self.mode) != self.mode or self.mode < 1:
            raise ValueError(f"mode must be a positive integer, got {self.mode}")


@dataclass(frozen=True)
class ModelParams:
    epsilon: float = 0.1
    Ra: float = 1.0
    Q: float = 1.0
    Pm: float = 1.0
    L: float = 2.0
    Nx: int = 32
    Ny: int = 33
    dt: float = 1e-3
    T: float = 0.5
    ic: ICPreset = field(default_factory=ICPreset)
    semigroup_substep_cap: float = stokes.DEFAULT_SUBSTEP_CAP
    model: str = "full"
    momentum_scheme: str = "exponential"

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        for name in ("Ra", "Q", "Pm", "semigroup_substep_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.dt <= self.T:
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.momentum_scheme not in MOMENTUM_SCHEMES:
            raise ValueError(f"momentum_scheme must be one of {MOMENTUM_SCHEMES}")
        Grid(self.Nx, self.Ny, self.L)

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.Nx, self.Ny, float(self.L))

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class FlowState:
    u: np.ndarray
    B: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    model_tag: str = "full"

    def copy(self) -> "FlowState":
        return FlowState(self.u.copy(), self.B.copy(), self.theta.copy(), self.t, self.model_tag)


def conduction_profile(grid: Grid) -> np.ndarray:
    return np.broadcast_to(1.0 - grid.y, grid.shape).copy()


def build_initial(preset: ICPreset, grid: Grid, model_tag: str = "full") -> FlowState:
    theta = conduction_profile(grid)
    if preset.name == "conduction":
        return FlowState(grid.zeros_vector(), grid.zeros_vector(), theta, 0.0, model_tag)
    X, Y = grid.mesh
    wave = np.sin(2 * np.pi * preset.mode * X / grid.L)
    bump = np.sin(np.pi * Y) ** 2
    u = ops.velocity_from_streamfunction(grid, preset.amp_psi * wave * bump)
    B = ops.velocity_from_streamfunction(grid, preset.amp_b * wave * bump)
    theta = theta + preset.amp_theta * wave * np.sin(np.pi * Y)
    theta[:, 0] = 1.0
    theta[:, -1] = 0.0
    return FlowState(u, B, theta, 0.0, model_tag)


# -- explicit terms -------------------------------------------------------


def buoyancy_lorentz(grid: Grid, B: np.ndarray, theta: np.ndarray, params: ModelParams) -> np.ndarray:
    """Ra k theta + Pm Q (B.grad B + dB/dy)."""
    f = params.Pm * params.Q * (ops.advect(grid, B, B) + ops.dy(grid, B))
    f[1] += params.Ra * theta
    return f


def momentum_forcing(
    grid: Grid, u: np.ndarray, B: np.ndarray, theta: np.ndarray, params: ModelParams, epsilon: float
) -> np.ndarray:
    f = buoyancy_lorentz(grid, B, theta, params)
    if epsilon:
        f -= epsilon * ops.advect(grid, u, u)
    return f


def induction_terms(grid: Grid, u: np.ndarray, B: np.ndarray) -> np.ndarray:
    """-u.grad B + B.grad u + du/dy (the explicit part of dB/dt)."""
    return -ops.advect(grid, u, B) + ops.advect(grid, B, u) + ops.dy(grid, u)


def heat_terms(grid: Grid, u: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """-u.grad Theta + u2 (the explicit part of dTheta/dt)."""
    return -ops.advect(grid, u, Theta) + u[1]


def nonlinear_terms(s: FlowState, params: ModelParams):
    """Explicit right-hand sides ``(momentum, induction, heat)`` at state ``s``."""
    grid = params.grid
    eps = 0.0 if s.model_tag == "limit" else params.epsilon
    Theta = s.theta - conduction_profile(grid)
    return (
        momentum_forcing(grid, s.u, s.B, s.theta, params, eps),
        induction_terms(grid, s.u, s.B),
        heat_terms(grid, s.u, Theta),
    )


# -- implicit diffusion ---------------------------------------------------


@lru_cache(maxsize=32)
def _diffusion_inverse(grid: Grid, dt: float, nu: float) -> np.ndarray:
    n = grid.Ny - 2
    h = grid.hy
    d2 = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2
    k2 = grid.wavenumbers**2
    mats = (1.0 / dt + nu * k2)[:, None, None] * np.eye(n) - nu * d2
    return np.linalg.inv(mats)


def implicit_diffusion(grid: Grid, f_old: np.ndarray, rhs: np.ndarray, dt: float, nu: float) -> np.ndarray:
    """Solve ``(f - f_old)/dt - nu*lap f = rhs`` with ``f = 0`` on both walls."""
    inv = _diffusion_inverse(grid, dt, nu)
    r = ops.to_modes(f_old / dt + rhs)[..., 1:-1]
    sol = np.einsum("mij,...mj->...mi", inv, r)
    out = np.zeros(r.shape[:-1] + (grid.Ny,), dtype=complex)
    out[..., 1:-1] = sol
    f = ops.from_modes(out, grid)
    f[..., 0] = 0.0
    f[..., -1] = 0.0
    return f


def _advance_fields(grid: Grid, s: FlowState, u_drive: np.ndarray, params: ModelParams):
    dt = params.dt
    profile = conduction_profile(grid)
    Theta = s.theta - profile
    B_new = implicit_diffusion(grid, s.B, induction_terms(grid, u_drive, s.B), dt, params.Pm)
    Theta_new = implicit_diffusion(grid, Theta, heat_terms(grid, u_drive, Theta), dt, 1.0)
    theta_new = Theta_new + profile
    theta_new[:, 0] = 1.0
    theta_new[:, -1] = 0.0
    return B_new, theta_new


def slaved_modes(grid: Grid, u, B, theta, params: ModelParams, epsilon: float = 0.0) -> np.ndarray:
    """Modal coordinates of ``A^{-1} P G``."""
    ws = stokes.make_workspace(grid, 0.0)
    return ws.solve_modes(ws.modal.forcing_modes(momentum_forcing(grid, u, B, theta, params, epsilon)))


def _finish(grid: Grid, s: FlowState, u, B, theta, params: ModelParams, tag: str) -> FlowState:
    out = FlowState(u, B, theta, s.t + params.dt, tag)
    check_state(grid, out)
    return out


def check_state(grid: Grid, s: FlowState) -> None:
    for name in ("u", "B", "theta"):
        if not np.all(np.isfinite(getattr(s, name))):
            raise SimulationError(f"non-finite values in {name}", s.t)
    div = np.abs(ops.divergence(grid, s.u)).max()
    if div > DIV_TOL:
        raise SimulationError(f"velocity divergence {div:.3e} exceeds {DIV_TOL}", s.t)


def _require(s: FlowState, tag: str) -> None:
    if s.model_tag != tag:
        raise ValueError(f"state is tagged {s.model_tag!r}, expected {tag!r}")


# -- steppers -------------------------------------------------------------


def step_limit(s: FlowState, params: ModelParams) -> FlowState:
    _require(s, "limit")
    grid = params.grid
    modal = stokes.modal_stokes(grid)
    u = modal.to_velocity(slaved_modes(grid, s.u, s.B, s.theta, params))
    B, theta = _advance_fields(grid, s, u, params)
    u_new = modal.to_velocity(slaved_modes(grid, u, B, theta, params))
    return _finish(grid, s, u_new, B, theta, params, "limit")


@dataclass
class EffectiveCache:
    """Initial-layer data for the effective model: ``w0`` and ``v = e^{-tau A} w0``."""

    w0: np.ndarray
    v: np.ndarray
    tau: float = 0.0


def initial_layer_modes(grid: Grid, s0: FlowState, params: ModelParams) -> np.ndarray:
    """Modal coordinates of ``w0 = u0 - A^{-1} P(Ra k theta0 + Pm Q (B0.grad B0 + dB0/dy))``."""
    modal = stokes.modal_stokes(grid)
    return modal.to_modes(s0.u) - slaved_modes(grid, s0.u, s0.B, s0.theta, params)


def make_effective_cache(s0: FlowState, params: ModelParams) -> EffectiveCache:
    w0 = initial_layer_modes(params.grid, s0, params)
    return EffectiveCache(w0, w0.copy(), 0.0)


def step_effective(s: FlowState, params: ModelParams, cache: EffectiveCache) -> FlowState:
    _require(s, "effective")
    grid = params.grid
    modal = stokes.modal_stokes(grid)
    span = params.dt / params.epsilon
    cap = params.semigroup_substep_cap
    c_slaved = slaved_modes(grid, s.u, s.B, s.theta, params)
    # the layer term decays within the step; drive transport with its step average
    u_drive = modal.to_velocity(c_slaved + modal.average(cache.v, span, cap))
    B, theta = _advance_fields(grid, s, u_drive, params)
    cache.v = modal.evolve(cache.v, span, cap)
    cache.tau += span
    u_new = modal.to_velocity(cache.v + slaved_modes(grid, s.u, B, theta, params))
    return _finish(grid, s, u_new, B, theta, params, "effective")


def step_full(s: FlowState, params: ModelParams) -> FlowState:
    _require(s, "full")
    if params.momentum_scheme == "imex":
        return _step_full_imex(s, params)
    grid = params.grid
    modal = stokes.modal_stokes(grid)
    span = params.dt / params.epsilon
    cap = params.semigroup_substep_cap
    eps = params.epsilon
    c_slaved = slaved_modes(grid, s.u, s.B, s.theta, params, eps)
    d = modal.to_modes(s.u) - c_slaved
    u_drive = modal.to_velocity(c_slaved + modal.average(d, span, cap))
    B, theta = _advance_fields(grid, s, u_drive, params)
    c_slaved_new = slaved_modes(grid, s.u, B, theta, params, eps)
    # exact for a slaved state varying linearly over the step
    d_new = modal.evolve(d, span, cap) - modal.average(c_slaved_new - c_slaved, span, cap)
    u_new = modal.to_velocity(c_slaved_new + d_new)
    return _finish(grid, s, u_new, B, theta, params, "full")


def _step_full_imex(s: FlowState, params: ModelParams) -> FlowState:
    grid = params.grid
    gamma = params.epsilon / params.dt
    forcing = momentum_forcing(grid, s.u, s.B, s.theta, params, params.epsilon)
    u_new = stokes.solve_generalized_stokes(
        gamma * s.u + forcing, gamma, stokes.make_workspace(grid, gamma)
    )
    B, theta = _advance_fields(grid, s, s.u, params)
    return _finish(grid, s, u_new, B, theta, params, "full")


# -- trajectories ---------------------------------------------------------


def diagnostics(grid: Grid, s: FlowState) -> dict:
    return {
        "time": s.t,
        "u_L2": norms.norm(grid, s.u, "L2"),
        "u_H1": norms.norm(grid, s.u, "H1"),
        "u_H2": norms.norm(grid, s.u, "H2"),
        "B_L2": norms.norm(grid, s.B, "L2"),
        "B_H1": norms.norm(grid, s.B, "H1"),
        "B_H2": norms.norm(grid, s.B, "H2"),
        "B_gradL4": norms.grad_l4(grid, s.B),
        "theta_L2": norms.norm(grid, s.theta, "L2"),
        "theta_H1": norms.norm(grid, s.theta, "H1"),
        "theta_Linf": norms.norm(grid, s.theta, "Linf"),
        "div_u": float(np.abs(ops.divergence(grid, s.u)).max()),
        "div_B": float(np.abs(ops.divergence(grid, s.B)).max()),
    }


@dataclass
class Trajectory:
    params: ModelParams
    times: np.ndarray
    states: list
    diagnostics: list
    layer: list | None = None  # effective model: modal e^{-tau A} w0 at each snapshot

    def state_at(self, t: float) -> FlowState:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 0.5 * self.params.dt:
            raise KeyError(f"no snapshot at t = {t}")
        return self.states[idx]

    @property
    def final(self) -> FlowState:
        return self.states[-1]


def _snapshot_steps(params: ModelParams, snapshot_times) -> set[int]:
    n = params.nsteps
    if snapshot_times is None:
        return set(range(n + 1))
    steps = set()
    for t in snapshot_times:
        k = t / params.dt
        if t < 0 or t > params.T + 1e-12 or abs(k - round(k)) > 1e-6:
            raise ValueError(f"snapshot time {t} is not a multiple of dt within [0, T]")
        steps.add(int(round(k)))
    return steps


def run_model(params: ModelParams, snapshot_times=None, diagnostics_every: int = 1) -> Trajectory:
    """Integrate ``params.model`` from its initial condition to ``T``.

    ``snapshot_times=None`` records every step.
    """
    grid = params.grid
    steps = _snapshot_steps(params, snapshot_times)
    s = build_initial(params.ic, grid, params.model)
    cache = None
    if params.model == "limit":
        s.u = stokes.modal_stokes(grid).to_velocity(slaved_modes(grid, s.u, s.B, s.theta, params))
    elif params.model == "effective":
        cache = make_effective_cache(s, params)
    check_state(grid, s)

    times, states, layer, diags = [], [], [], []

    def record(n, s):
        if n in steps:
            times.append(s.t)
            states.append(s)
            if cache is not None:
                layer.append(cache.v.copy())
        if n % diagnostics_every == 0 or n == params.nsteps:
            diags.append(diagnostics(grid, s))

    record(0, s)
    for n in range(1, params.nsteps + 1):
        if params.model == "full":
            s = step_full(s, params)
        elif params.model == "limit":
            s = step_limit(s, params)
        else:
            s = step_effective(s, params, cache)
        s.t = n * params.dt
        record(n, s)
    return Trajectory(params, np.array(times), states, diags, layer if cache is not None else None)
