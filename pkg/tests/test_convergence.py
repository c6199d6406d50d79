from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magnetoconv import convergence as cv
from magnetoconv import norms, stokes
from magnetoconv.dynamics import ModelParams, build_initial, initial_layer_modes, run_model

SMALL = ModelParams(Nx=16, Ny=17, dt=2e-3, T=0.08)
CONDUCTION = replace(SMALL, ic=replace(SMALL.ic, name="conduction"))


def test_fit_rate_exact_power_laws():
    slope, _, resid = cv.fit_rate([(0.1, 0.1), (0.01, 0.01)])
    assert slope == pytest.approx(1.0, abs=1e-14) and resid <= 1e-12
    c = 0.7
    slope, _, _ = cv.fit_rate([(0.1, c * 0.1**0.5), (0.01, c * 0.01**0.5)])
    assert slope == pytest.approx(0.5, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1e-3, 1e3), st.integers(2, 8))
def test_fit_rate_recovers_any_power_law(p, c, n):
    eps = 0.2 * 0.5 ** np.arange(n)
    slope, intercept, resid = cv.fit_rate(list(zip(eps, c * eps**p)))
    assert slope == pytest.approx(p, abs=1e-10)
    assert intercept == pytest.approx(np.log(c), abs=1e-8)
    assert resid <= 1e-10


def test_fit_rate_with_noise():
    eps = np.array(cv.DEFAULT_EPS_LIST)
    rng = np.random.default_rng(7)
    for _ in range(200):
        err = 2 * eps * (1 + rng.uniform(-0.05, 0.05, eps.size))
        slope, _, _ = cv.fit_rate(list(zip(eps, err)))
        assert 0.85 <= slope <= 1.15


@pytest.mark.parametrize("pts", [[(0.1, 0.0), (0.05, 0.1)], [(0.1, -1.0), (0.05, 0.1)], [(0.1, 1.0)]])
def test_fit_rate_rejects_bad_input(pts):
    with pytest.raises(ValueError):
        cv.fit_rate(pts)


def test_rate_entry_exact_line_passes():
    pts = [(e, 3 * e, 3 * e) for e in cv.DEFAULT_EPS_LIST]
    e = cv.rate_entry(pts, 1.0)
    assert e.slope == pytest.approx(1.0, abs=1e-12) and e.passed and not e.floored and e.monotone


def test_rate_entry_flags_floor():
    errs = [1e-2, 5e-3, 2.5e-3, 2.4e-3, 2.4e-3]
    e = cv.rate_entry([(eps, v, v) for eps, v in zip(cv.DEFAULT_EPS_LIST, errs)], 1.0)
    assert e.floored and not e.passed and "floor" in e.note
    assert cv.floor_index(errs) == 3


def test_rate_entry_slow_decay_fails():
    e = cv.rate_entry([(eps, eps**0.5, eps**0.5) for eps in cv.DEFAULT_EPS_LIST], 1.0)
    assert not e.passed and e.slope == pytest.approx(0.5)


def test_rate_report_requires_decreasing_eps():
    with pytest.raises(ValueError):
        cv.RateReport([0.1, 0.1, 0.05], {})


@pytest.fixture(scope="module")
def runs():
    return {m: run_model(replace(SMALL, model=m, epsilon=0.05)) for m in ("full", "limit", "effective")}


def test_compare_identical_trajectories_is_zero(runs):
    series = cv.compare_trajectories(runs["full"], runs["full"], ["u:L2", "B:H1", "theta:Linf", "B:gradL4"])
    assert all(np.all(s.values == 0) for s in series)


def test_compare_is_symmetric(runs):
    qs = ["u:H2", "B:L2", "theta:L4", "u:gradH1"]
    ab = cv.compare_trajectories(runs["full"], runs["limit"], qs)
    ba = cv.compare_trajectories(runs["limit"], runs["full"], qs)
    for s, t in zip(ab, ba):
        assert np.array_equal(s.values, t.values)
        assert s.sup > 0


def test_compare_conduction_limit_vs_effective():
    a = run_model(replace(CONDUCTION, model="limit"))
    b = run_model(replace(CONDUCTION, model="effective"))
    for s in cv.compare_trajectories(a, b, ["u:L2", "B:L2", "theta:L2"]):
        assert np.all(s.values == 0)


def test_compare_rejects_mismatched_runs(runs):
    other = run_model(replace(SMALL, Ny=21, model="limit"))
    with pytest.raises(ValueError):
        cv.compare_trajectories(runs["full"], other, ["u:L2"])
    short = run_model(replace(SMALL, model="limit", T=0.04))
    with pytest.raises(ValueError):
        cv.compare_trajectories(runs["full"], short, ["u:L2"])
    with pytest.raises(ValueError):
        cv.compare_trajectories(runs["full"], runs["limit"], ["p:L2"])
    with pytest.raises(ValueError):
        cv.compare_trajectories(runs["full"], runs["limit"], ["u-u0-corr:L2"])


def test_correction_field_at_zero_is_layer_datum():
    p = ModelParams()
    ic = build_initial(p.ic, p.grid)
    modal = stokes.modal_stokes(p.grid)
    w0 = modal.to_velocity(initial_layer_modes(p.grid, ic, p))
    assert np.array_equal(cv.correction_field(ic, 0.0, p), w0)


def test_correction_field_vanishes_for_conduction():
    ic = build_initial(CONDUCTION.ic, CONDUCTION.grid)
    for tau in (0.0, 0.3, 2.0):
        assert np.all(cv.correction_field(ic, tau, CONDUCTION) == 0)


def test_correction_field_decays():
    p = ModelParams()
    g = p.grid
    ic = build_initial(p.ic, g)
    lam = stokes.estimate_slowest_decay(g)
    n0 = norms.norm(g, cv.correction_field(ic, 0.0, p))
    assert norms.norm(g, cv.correction_field(ic, 2.0, p)) <= np.exp(-2 * (lam - 0.5)) * n0


def test_correction_series_matches_direct_evaluation():
    p = replace(SMALL, epsilon=0.05)
    ic = build_initial(p.ic, p.grid)
    times = [0.0, 0.01, 0.03]
    for t, c in zip(times, cv.correction_series(p, times)):
        direct = cv.correction_field(ic, t / p.epsilon, p)
        assert np.allclose(c, direct, atol=1e-9 * max(1.0, np.abs(direct).max()))


def test_corrected_error_vanishes_initially(runs):
    corr = cv.correction_series(replace(SMALL, epsilon=0.05), runs["full"].times)
    (s,) = cv.compare_trajectories(runs["full"], runs["limit"], ["u-u0-corr:L2"], correction=corr)
    (raw,) = cv.compare_trajectories(runs["full"], runs["limit"], ["u:L2"])
    assert s.values[0] <= 1e-10 and raw.values[0] > 1e-2


def test_layer_diagnostic(runs):
    prof = cv.layer_diagnostic(runs["full"], runs["limit"], 0.1)
    assert prof.values[0] == 0.0 and np.all(prof.values >= 0)
    assert prof.peak == prof.values[prof.times >= 0.05**0.9 - 1e-12].max()
    assert cv.layer_diagnostic(runs["limit"], runs["limit"]).peak == 0.0
    with pytest.raises(ValueError):
        cv.layer_diagnostic(runs["full"], runs["limit"], 1.0)


def test_layer_band():
    mk = lambda eps, m: cv.LayerProfile(eps, np.array([1.0]), np.array([m]), 0.1)  # noqa: E731
    assert cv.layer_band([mk(0.1, 0.1), mk(0.05, 0.05)]) == pytest.approx(1.0)
    assert cv.layer_band([mk(0.1, 0.01), mk(0.05, 0.0025)]) == pytest.approx(2.0)


def test_error_series_validation():
    with pytest.raises(ValueError):
        cv.ErrorSeries([0.0, 1.0], [1.0], "L2", "B-B0:L2")
    with pytest.raises(ValueError):
        cv.ErrorSeries([0.0], [np.nan], "L2", "B-B0:L2")


def test_quantity_specs():
    assert cv.quantity_spec("u-u0-corr:gradH1") == (0.5, True)
    assert cv.quantity_spec("theta-theta0:H1") == (0.5, False)
    with pytest.raises(ValueError):
        cv.quantity_spec("v-v0:L2")


def test_small_sweep():
    base = replace(SMALL, T=0.04)
    report = cv.sweep_epsilon(base, [0.1, 0.05, 0.025], ["B-B0:L2", "u-u(0):L2", "u-u0:L2"])
    assert list(report.entries) == ["B-B0:L2", "u-u(0):L2", "u-u0:L2"]
    for e in report.entries.values():
        assert [p[0] for p in e.points] == [0.1, 0.05, 0.025]
    assert [e.gated for e in report.entries.values()] == [True, True, False]
    assert set(report.bounds) == {0.1, 0.05, 0.025}
    assert (0.05, 0.5) in report.layers
    d = report.as_dict()
    assert set(d["B-B0:L2"]) >= {"points", "slope", "theory_slope", "pass", "floored"}


@pytest.mark.parametrize("eps", [[0.1, 0.05], [0.1, 0.05, 0.06]])
def test_sweep_validates_eps_list(eps):
    with pytest.raises(ValueError):
        cv.sweep_epsilon(SMALL, eps)


def test_error_away_from_layer_scales_like_eps_squared():
    # beyond the layer u - u0 is O(eps) in H2, so t |u - u0|^2_H2 at fixed t drops ~4x per halving
    base = ModelParams(T=0.2)
    limit = run_model(replace(base, model="limit"), snapshot_times=[0.2])
    vals = []
    for eps in (0.02, 0.01):
        full = run_model(replace(base, epsilon=eps), snapshot_times=[0.2])
        vals.append(cv.layer_diagnostic(full, limit).values[-1])
    assert 3.0 <= vals[0] / vals[1] <= 5.0
