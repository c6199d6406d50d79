import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from magnetoconv import io
from magnetoconv.convergence import ErrorSeries, RateEntry, RateReport
from magnetoconv.dynamics import FlowState, ModelParams, build_initial


def write(tmp_path, text, name="cfg.json"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_minimal_config_gets_defaults(tmp_path):
    cfg = io.load_config(write(tmp_path, '{"model": "limit"}'))
    p = cfg.params()
    assert (p.model, p.Nx, p.Ny, p.L, p.dt, p.T) == ("limit", 32, 33, 2.0, 1e-3, 0.5)
    assert (p.ic.name, p.ic.amp_psi, p.ic.amp_b, p.ic.amp_theta, p.ic.mode) == ("perturbed", 0.1, 0.1, 0.2, 1)
    assert p == ModelParams(model="limit")


@pytest.mark.parametrize(
    "raw, field",
    [
        ({"epsilon": 0}, "epsilon"),
        ({"Nx": 31}, "Nx"),
        ({"Nx": 32.5}, "Nx"),
        ({"dt": "small"}, "dt"),
        ({"amp_theta": 0.9}, "amp_theta"),
        ({"model": "maxwell"}, "model"),
        ({"eps_list": [0.1, 0.2, 0.05]}, "eps_list"),
        ({"quantities": ["X:L2"]}, "quantities"),
        ({"alpha": 1.0}, "alpha"),
        ({"snapshot_times": [0.0005]}, "snapshot_times"),
        ({"viscosity": 1.0}, "viscosity"),
        ({"Ra": True}, "Ra"),
    ],
)
def test_validation_names_the_field(tmp_path, raw, field):
    with pytest.raises(io.ConfigError) as exc:
        io.load_config(write(tmp_path, json.dumps(raw)))
    assert exc.value.field == field
    assert field in str(exc.value)


def test_parse_error_has_position(tmp_path):
    with pytest.raises(io.ConfigError, match="line 2, column 3"):
        io.load_config(write(tmp_path, '{"model":\n  }'))
    with pytest.raises(io.ConfigError):
        io.load_config(write(tmp_path, "[1, 2]"))


def test_config_round_trip(tmp_path):
    cfg = io.load_config(write(tmp_path, '{"model": "full", "epsilon": 0.05}'))
    io.save_config(cfg, tmp_path / "again.json")
    again = io.load_config(tmp_path / "again.json")
    assert again == cfg
    io.save_config(again, tmp_path / "third.json")
    assert (tmp_path / "again.json").read_bytes() == (tmp_path / "third.json").read_bytes()


def test_schema_help_lists_every_key():
    text = io.schema_help()
    for key in io.CONFIG_KEYS:
        assert key in text


def test_snapshot_size_and_round_trip(tmp_path):
    p = ModelParams(Nx=16, Ny=17)
    s = build_initial(p.ic, p.grid)
    s.t = 0.25
    path = tmp_path / "s.bin"
    io.write_snapshot(s, path, p.L, 0.05)
    assert path.stat().st_size == io.HEADER_SIZE + 5 * 8 * 16 * 17
    assert io.HEADER_SIZE == 38
    back, header = io.read_snapshot(path)
    for name in ("u", "B", "theta"):
        assert np.array_equal(getattr(back, name), getattr(s, name))
    assert (back.t, back.model_tag) == (0.25, "full")
    assert header == {"Nx": 16, "Ny": 17, "L": 2.0, "t": 0.25, "epsilon": 0.05}


def test_snapshot_layout_is_row_major(tmp_path):
    u = np.arange(2 * 4 * 5, dtype=float).reshape(2, 4, 5)
    s = FlowState(u, -u, np.full((4, 5), 0.5), 0.0, "limit")
    path = tmp_path / "s.bin"
    io.write_snapshot(s, path)
    raw = path.read_bytes()
    assert raw[:5] == b"MCNV\x01"
    first = np.frombuffer(raw[io.HEADER_SIZE:io.HEADER_SIZE + 8 * 20], dtype="<f8")
    assert np.array_equal(first, u[0].ravel())


@settings(max_examples=25, deadline=None)
@given(arrays(float, (5, 4, 5), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)),
       st.floats(0, 10), st.sampled_from(["full", "limit", "effective"]))
def test_snapshot_round_trip_is_bitwise(tmp_path_factory, fields, t, tag):
    s = FlowState(fields[:2], fields[2:4], fields[4], t, tag)
    path = tmp_path_factory.mktemp("snap") / "s.bin"
    io.write_snapshot(s, path, 3.5, 0.01)
    back, _ = io.read_snapshot(path)
    assert back.u.tobytes() == s.u.tobytes() and back.B.tobytes() == s.B.tobytes()
    assert back.theta.tobytes() == s.theta.tobytes() and back.t == t and back.model_tag == tag


def test_snapshot_errors(tmp_path):
    p = ModelParams(Nx=16, Ny=17)
    path = tmp_path / "s.bin"
    io.write_snapshot(build_initial(p.ic, p.grid), path)
    data = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(io.SnapshotError, match=f"expected {len(data)} bytes, got {len(data) - 8}"):
        io.read_snapshot(tmp_path / "short.bin")
    (tmp_path / "magic.bin").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(io.SnapshotError, match="byte offset 0"):
        io.read_snapshot(tmp_path / "magic.bin")
    (tmp_path / "ver.bin").write_bytes(data[:4] + b"\x02" + data[5:])
    with pytest.raises(io.SnapshotError, match="byte offset 4"):
        io.read_snapshot(tmp_path / "ver.bin")
    (tmp_path / "head.bin").write_bytes(data[:10])
    with pytest.raises(io.SnapshotError, match="truncated header"):
        io.read_snapshot(tmp_path / "head.bin")


def test_series_csv(tmp_path):
    path = tmp_path / "e.csv"
    io.write_series([], path)
    assert path.read_bytes() == b"time\n"
    vals = np.array([0.1, 1 / 3, np.pi * 1e-17])
    s = ErrorSeries([0.0, 0.001, 0.002], vals, "L2", "B-B0:L2")
    io.write_series([s], path)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.count(b"\n") == 4
    header, data = io.read_series(path)
    assert header == ["time", "B-B0:L2"]
    assert data[:, 1].tobytes() == vals.tobytes()


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_series_round_trip_is_bitwise(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    times = np.arange(len(values)) * 1e-3
    io.write_series([ErrorSeries(times, np.abs(values), "H1", "u-u(0):H1")], path)
    _, data = io.read_series(path)
    assert data[:, 0].tobytes() == times.tobytes()
    assert data[:, 1].tobytes() == np.abs(values).tobytes()


def test_diagnostics_csv(tmp_path):
    rows = [{"time": 0.0, "u_L2": 1.5, "theta_Linf": 1.0}, {"time": 0.1, "u_L2": 0.7, "theta_Linf": 1.0}]
    io.write_series(rows, tmp_path / "d.csv")
    header, data = io.read_series(tmp_path / "d.csv")
    assert header == ["time", "u_L2", "theta_Linf"] and data.shape == (2, 3)


def test_rate_report_json(tmp_path):
    entries = {
        "B-B0:L2": RateEntry([(0.1, 1e-3, 1e-4), (0.05, 5e-4, 5e-5)], 1.0, 1.0, True, 0.0),
        "B-B0:gradL4": RateEntry([(0.1, 1e-3, 1e-4), (0.05, 1e-3, 5e-5)], float("nan"), 0.25, False,
                                 float("nan"), floored=True, gated=False),
    }
    io.write_rate_report(RateReport([0.1, 0.05], entries), tmp_path / "r.json")
    d = io.read_rate_report(tmp_path / "r.json")
    assert d["B-B0:L2"]["points"] == [[0.1, 1e-3, 1e-4], [0.05, 5e-4, 5e-5]]
    assert d["B-B0:L2"]["pass"] is True and d["B-B0:gradL4"]["slope"] is None
    assert set(d["B-B0:L2"]) >= {"points", "slope", "theory_slope", "pass", "floored"}
