"""Error series between model trajectories, epsilon sweeps and rate fits.

Quantity tags name the pair of models and the field compared:

``B-B0``, ``theta-theta0``, ``u-u0``, ``u-u0-corr``   full vs limit
``B(0)-B0``, ``theta(0)-theta0``                     effective vs limit
``u-u(0)``, ``B-B(0)``                               full vs effective

followed by ``:<norm>`` where the norm is one of L2, H1, H2, L4, Linf or
``gradH1`` / ``gradL4`` (norms of the gradient). ``u-u0-corr`` subtracts the
initial-layer correction ``e^{-tau A} w0`` with ``tau = t/eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import norms
from . import stokes
from .dynamics import FlowState, ModelParams, Trajectory, build_initial, initial_layer_modes, run_model

DEFAULT_EPS_LIST = (1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3)
SLOPE_TOLERANCE = 0.15
MAX_RESIDUAL = 0.3
FLOOR_RATIO = 0.9
MONOTONE_SLACK = 1.05

# model pair of each field prefix: (first model, second model, field, corrected)
PAIRS = {
    "B-B0": ("full", "limit", "B", False),
    "theta-theta0": ("full", "limit", "theta", False),
    "u-u0": ("full", "limit", "u", False),
    "u-u0-corr": ("full", "limit", "u", True),
    "B(0)-B0": ("effective", "limit", "B", False),
    "theta(0)-theta0": ("effective", "limit", "theta", False),
    "u-u(0)": ("full", "effective", "u", False),
    "B-B(0)": ("full", "effective", "B", False),
}

# tag -> (theoretical slope, gated)
DEFAULT_QUANTITIES = {
    "B-B0:L2": (1.0, True),
    "theta-theta0:L2": (1.0, True),
    "u-u0-corr:L2": (1.0, True),
    "u-u0-corr:gradH1": (0.5, True),
    "B(0)-B0:L2": (1.0, True),
    "u-u(0):L2": (1.0, True),
    "B-B0:gradL4": (0.25, False),
    "u-u0:L2": (0.0, False),
}

NORMS = ("L2", "H1", "H2", "L4", "Linf", "gradH1", "gradL4")


@dataclass
class ErrorSeries:
    times: np.ndarray
    values: np.ndarray
    norm_kind: str
    quantity_tag: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite values in series {self.quantity_tag}")

    @property
    def sup(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    @property
    def final(self) -> float:
        return float(self.values[-1]) if self.values.size else 0.0


@dataclass
class RateEntry:
    points: list  # (eps, sup error, final error)
    slope: float
    theory_slope: float
    passed: bool
    residual: float
    floored: bool = False
    gated: bool = True
    monotone: bool = True
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "slope": self.slope,
            "theory_slope": self.theory_slope,
            "pass": self.passed,
            "floored": self.floored,
            "residual": self.residual,
            "gated": self.gated,
            "monotone": self.monotone,
            "note": self.note,
        }


@dataclass
class LayerProfile:
    epsilon: float
    times: np.ndarray
    values: np.ndarray
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite layer profile")

    @property
    def threshold(self) -> float:
        return self.epsilon ** (1 - self.alpha)

    @property
    def peak(self) -> float:
        """``M(eps)``: max of ``t |u - u0|_H2^2`` over ``t >= eps^(1 - alpha)``."""
        keep = self.times >= self.threshold - 1e-12
        return float(self.values[keep].max()) if keep.any() else 0.0


@dataclass
class RateReport:
    eps_list: list
    entries: dict  # tag -> RateEntry
    series: dict = field(default_factory=dict)  # eps -> list of ErrorSeries
    layers: dict = field(default_factory=dict)  # (eps, alpha) -> LayerProfile
    bounds: dict = field(default_factory=dict)  # eps -> uniform-bound diagnostics

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ValueError("eps_list must be strictly decreasing")

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries.values() if e.gated and not e.floored)

    def as_dict(self) -> dict:
        return {tag: e.as_dict() for tag, e in self.entries.items()}


# -- correction and comparisons -------------------------------------------


def correction_field(ic: FlowState, tau: float, params: ModelParams | None = None) -> np.ndarray:
    """Initial-layer correction ``e^{-tau A}(u0 - A^{-1} P F(theta0, B0))``."""
    params = params or ModelParams()
    grid = params.grid
    modal = stokes.modal_stokes(grid)
    w0 = initial_layer_modes(grid, ic, params)
    return modal.to_velocity(modal.evolve(w0, tau, params.semigroup_substep_cap))


def correction_series(params: ModelParams, times) -> list:
    """Correction at each snapshot time, advanced in steps of ``dt/eps`` like the models."""
    grid = params.grid
    modal = stokes.modal_stokes(grid)
    span = params.dt / params.epsilon
    cap = params.semigroup_substep_cap
    c = initial_layer_modes(grid, build_initial(params.ic, grid), params)
    out, n = [], 0
    for t in times:
        target = int(round(t / params.dt))
        while n < target:
            c = modal.evolve(c, span, cap)
            n += 1
        out.append(modal.to_velocity(c))
    return out


def _norm(grid, f, kind: str) -> float:
    if kind == "gradH1":
        return norms.grad_h1(grid, f)
    if kind == "gradL4":
        return norms.grad_l4(grid, f)
    return norms.norm(grid, f, kind)


def parse_tag(tag: str) -> tuple[str, str]:
    prefix, _, kind = tag.partition(":")
    if prefix not in PAIRS or kind not in NORMS:
        raise ValueError(f"unknown quantity tag {tag!r}")
    return prefix, kind


def quantity_spec(tag: str) -> tuple[float, bool]:
    """Theoretical slope and gating for a tag; tags outside the default set are report-only."""
    if tag in DEFAULT_QUANTITIES:
        return DEFAULT_QUANTITIES[tag]
    prefix, kind = parse_tag(tag)
    if prefix == "u-u0":
        return 0.0, False  # the uncorrected velocity carries the initial layer
    return {"L2": 1.0, "H1": 0.5, "gradH1": 0.5, "gradL4": 0.25}.get(kind, 0.5), False


def _check_matched(a: Trajectory, b: Trajectory) -> None:
    pa, pb = a.params, b.params
    if (pa.Nx, pa.Ny, pa.L) != (pb.Nx, pb.Ny, pb.L):
        raise ValueError("trajectories live on different grids")
    if pa.dt != pb.dt or pa.ic != pb.ic:
        raise ValueError("trajectories differ in dt or initial data")
    if a.times.shape != b.times.shape or np.any(np.abs(a.times - b.times) > 1e-12):
        raise ValueError("trajectories have different snapshot times")


def compare_trajectories(
    a: Trajectory, b: Trajectory, quantities, correction=None
) -> list[ErrorSeries]:
    """Error series ``a - b`` for each ``"<field>:<norm>"`` or full quantity tag.

    ``correction`` is an optional list of velocity fields (one per snapshot)
    subtracted from ``u_a - u_b``.
    """
    _check_matched(a, b)
    grid = a.params.grid
    out = []
    for q in quantities:
        name, _, kind = q.partition(":")
        fld = PAIRS[name][2] if name in PAIRS else name
        corrected = PAIRS[name][3] if name in PAIRS else False
        if fld not in ("u", "B", "theta") or kind not in NORMS:
            raise ValueError(f"unknown quantity {q!r}")
        if corrected and correction is None:
            raise ValueError(f"{q} needs a correction series")
        vals = []
        for n, (sa, sb) in enumerate(zip(a.states, b.states)):
            diff = getattr(sa, fld) - getattr(sb, fld)
            if corrected:
                diff = diff - correction[n]
            vals.append(_norm(grid, diff, kind))
        out.append(ErrorSeries(a.times.copy(), np.array(vals), kind, q))
    return out


# -- rate fitting ---------------------------------------------------------


def fit_rate(points) -> tuple[float, float, float]:
    """Least-squares line through ``(ln eps, ln err)``; returns slope, intercept, RMS residual."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two (epsilon, error) points")
    if np.any(pts[:, :2] <= 0):
        raise ValueError("epsilon and error values must be positive")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    design = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def floor_index(errors) -> int | None:
    """First index whose error failed to drop below ``FLOOR_RATIO`` times its predecessor."""
    for k in range(1, len(errors)):
        if errors[k - 1] == 0 or errors[k] / errors[k - 1] >= FLOOR_RATIO:
            return k
    return None


def rate_entry(points, theory: float, gated: bool = True) -> RateEntry:
    sup = [p[1] for p in points]
    monotone = all(b <= a * MONOTONE_SLACK for a, b in zip(sup, sup[1:]))
    # a quantity expected not to decay cannot floor
    k = floor_index(sup) if theory > 0 else None
    if k is not None or min(sup) <= 0:
        return RateEntry(
            list(points), math.nan, theory, False, math.nan, floored=True, gated=gated,
            monotone=monotone,
            note=f"discretization floor reached at eps={points[k or 0][0]:g}; excluded from the fit",
        )
    slope, _, resid = fit_rate([(p[0], p[1]) for p in points])
    ok = slope >= theory - SLOPE_TOLERANCE and resid <= MAX_RESIDUAL
    note = "" if gated else "report only"
    if theory <= 0:
        note = "report only; carries the initial layer and is not expected to decay"
    return RateEntry(list(points), slope, theory, bool(ok), resid, gated=gated, monotone=monotone, note=note)


# -- layer and uniform bounds ---------------------------------------------


def layer_diagnostic(full: Trajectory, limit: Trajectory, alpha: float = 0.1) -> LayerProfile:
    """Profile ``t |u - u0|_H2^2`` between matched full and limit runs."""
    _check_matched(full, limit)
    grid = full.params.grid
    vals = [s.t * norms.norm(grid, s.u - r.u, "H2") ** 2 for s, r in zip(full.states, limit.states)]
    return LayerProfile(full.params.epsilon, full.times.copy(), np.array(vals), alpha)


def layer_band(profiles) -> float:
    """Spread ``max M/eps`` over ``min M/eps``; inf if any peak vanishes."""
    scaled = [p.peak / p.epsilon for p in profiles]
    return math.inf if min(scaled) <= 0 else max(scaled) / min(scaled)


def uniform_bounds(traj: Trajectory) -> dict:
    """Sup over time of the norms that stay bounded independently of eps."""
    d = traj.diagnostics
    return {
        "u_H1": max(r["u_H1"] for r in d),
        "B_gradL4": max(r["B_gradL4"] for r in d),
        "theta_Linf": max(r["theta_Linf"] for r in d),
        "B_H2": max(r["B_H2"] for r in d),
    }


def bounds_spread(bounds: dict, key: str) -> float:
    vals = [b[key] for b in bounds.values()]
    lo = min(vals)
    return math.inf if lo <= 0 else max(vals) / lo


# -- sweep ----------------------------------------------------------------


def sweep_epsilon(
    base: ModelParams,
    eps_list=DEFAULT_EPS_LIST,
    quantities=None,
    alphas=(0.1, 0.5),
    progress=None,
) -> RateReport:
    """Run the limit model once and the full and effective models per eps, then fit rates.

    ``quantities`` maps tags to ``(theoretical slope, gated)``; a plain list of
    tags is looked up with ``quantity_spec``.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("need at least three epsilon values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    if quantities is None:
        quantities = DEFAULT_QUANTITIES
    if not isinstance(quantities, dict):
        quantities = {tag: quantity_spec(tag) for tag in quantities}
    for tag in quantities:
        parse_tag(tag)

    limit = run_model(replace(base, model="limit"))
    per_tag = {tag: [] for tag in quantities}
    report = RateReport(eps_list, {})
    for eps in eps_list:
        runs = {"limit": limit}
        runs["full"] = run_model(replace(base, model="full", epsilon=eps))
        runs["effective"] = run_model(replace(base, model="effective", epsilon=eps))
        corr = correction_series(replace(base, epsilon=eps), limit.times)
        series = []
        for tag in quantities:
            prefix, kind = parse_tag(tag)
            first, second, _, corrected = PAIRS[prefix]
            (s,) = compare_trajectories(
                runs[first], runs[second], [tag], correction=corr if corrected else None
            )
            series.append(s)
            per_tag[tag].append((eps, s.sup, s.final))
        report.series[eps] = series
        for alpha in alphas:
            report.layers[(eps, alpha)] = layer_diagnostic(runs["full"], limit, alpha)
        report.bounds[eps] = uniform_bounds(runs["full"])
        if progress is not None:
            progress(eps)
    for tag, (theory, gated) in quantities.items():
        report.entries[tag] = rate_entry(per_tag[tag], theory, gated)
    return report
