"""Configuration files, binary snapshots, CSV series and rate reports."""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .convergence import DEFAULT_EPS_LIST, DEFAULT_QUANTITIES, ErrorSeries, RateReport, parse_tag
from .dynamics import MODELS, FlowState, ICPreset, ModelParams

SNAPSHOT_MAGIC = b"MCNV"
SNAPSHOT_VERSION = 1
# magic, version, Nx, Ny, L, t, epsilon, model tag
_HEADER = struct.Struct("<4sBIIdddB")
HEADER_SIZE = _HEADER.size
MODEL_CODES = {name: code for code, name in enumerate(MODELS)}


class ConfigError(ValueError):
    def __init__(self, message: str, field_name: str | None = None):
        self.field = field_name
        super().__init__(message if field_name is None else f"{field_name}: {message}")


class SnapshotError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


# -- configuration --------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    model: str = "full"
    epsilon: float = 0.1
    Ra: float = 1.0
    Q: float = 1.0
    Pm: float = 1.0
    L: float = 2.0
    Nx: int = 32
    Ny: int = 33
    dt: float = 1e-3
    T: float = 0.5
    ic: str = "perturbed"
    amp_psi: float = 0.1
    amp_b: float = 0.1
    amp_theta: float = 0.2
    mode: int = 1
    semigroup_substep_cap: float = 1e-2
    momentum_scheme: str = "exponential"
    out_dir: str = "out"
    snapshot_times: tuple = ()
    eps_list: tuple = DEFAULT_EPS_LIST
    quantities: tuple = tuple(DEFAULT_QUANTITIES)
    alpha: float = 0.1

    def params(self, **overrides) -> ModelParams:
        ic = ICPreset(self.ic, self.amp_psi, self.amp_b, self.amp_theta, self.mode)
        kw = {f.name: getattr(self, f.name) for f in fields(ModelParams) if f.name != "ic"}
        kw.update(overrides)
        return ModelParams(ic=ic, **kw)

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("snapshot_times", "eps_list", "quantities"):
            d[key] = list(d[key])
        return d


CONFIG_KEYS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = ("Nx", "Ny", "mode")
_STR_KEYS = ("model", "ic", "momentum_scheme", "out_dir")
_LIST_KEYS = ("snapshot_times", "eps_list", "quantities")


def schema_help() -> str:
    defaults = RunConfig().to_json()
    lines = ["config: flat JSON object; every key optional:"]
    lines += [f"  {k}: default {json.dumps(v)}" for k, v in defaults.items()]
    return "\n".join(lines)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key: str, value):
    if key in _INT_KEYS:
        if not _is_number(value) or int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return int(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key)
        return value
    if key in _LIST_KEYS:
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", key)
        if key == "quantities":
            for q in value:
                try:
                    parse_tag(q)
                except (ValueError, TypeError):
                    raise ConfigError(f"unknown quantity {q!r}", key) from None
            return tuple(value)
        if not all(_is_number(v) for v in value):
            raise ConfigError("expected a list of numbers", key)
        return tuple(float(v) for v in value)
    if not _is_number(value) or not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", key)
    return float(value)


def _validate(cfg: RunConfig) -> None:
    try:
        params = cfg.params()
    except ValueError as exc:
        msg = str(exc)
        name = next((k for k in CONFIG_KEYS if msg.startswith(k + " ")), None)
        if name is None:
            name = next((k for k in CONFIG_KEYS if k in msg), None)
        raise ConfigError(msg, name) from None
    eps = cfg.eps_list
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("need at least three strictly decreasing values", "eps_list")
    if not all(0 < e <= 1 for e in eps):
        raise ConfigError("values must lie in (0, 1]", "eps_list")
    if not 0 < cfg.alpha < 1:
        raise ConfigError("must lie in (0, 1)", "alpha")
    for t in cfg.snapshot_times:
        k = t / params.dt
        if t < 0 or t > params.T + 1e-12 or abs(k - round(k)) > 1e-6:
            raise ConfigError(f"{t} is not a multiple of dt within [0, T]", "snapshot_times")


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", unknown[0])
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in raw.items()})
    _validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_json(), indent=2) + "\n", encoding="utf-8")


# -- snapshots ------------------------------------------------------------


def write_snapshot(s: FlowState, path, L: float = 2.0, epsilon: float = 0.0) -> None:
    nx, ny = s.theta.shape
    if s.model_tag not in MODEL_CODES:
        raise ValueError(f"unknown model tag {s.model_tag!r}")
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, nx, ny, float(L), float(s.t),
        float(epsilon), MODEL_CODES[s.model_tag],
    )
    body = np.concatenate([s.u[0], s.u[1], s.B[0], s.B[1], s.theta]).astype("<f8").tobytes()
    Path(path).write_bytes(header + body)


def snapshot_size(nx: int, ny: int) -> int:
    return HEADER_SIZE + 5 * 8 * nx * ny


def read_snapshot(path) -> tuple[FlowState, dict]:
    """Return the state and the header fields (Nx, Ny, L, t, epsilon)."""
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise SnapshotError(f"truncated header: expected {HEADER_SIZE} bytes, got {len(data)}", len(data))
    magic, version, nx, ny, L, t, eps, code = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotError(f"bad magic {magic!r}", 0)
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported version {version}", 4)
    if code >= len(MODELS):
        raise SnapshotError(f"unknown model tag code {code}", HEADER_SIZE - 1)
    expected = snapshot_size(nx, ny)
    if len(data) != expected:
        raise SnapshotError(f"expected {expected} bytes, got {len(data)}", min(len(data), expected))
    arr = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE).astype(float).reshape(5, nx, ny)
    state = FlowState(arr[0:2].copy(), arr[2:4].copy(), arr[4].copy(), t, MODELS[code])
    return state, {"Nx": nx, "Ny": ny, "L": L, "t": t, "epsilon": eps}


# -- CSV series -----------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_series(series, path) -> None:
    """CSV with a ``time`` column and one column per ErrorSeries or diagnostics key."""
    series = list(series)
    if not series:
        write_table(path, ["time"], [])
        return
    if isinstance(series[0], ErrorSeries):
        times = series[0].times
        for s in series[1:]:
            if not np.array_equal(s.times, times):
                raise ValueError("series have different time grids")
        header = ["time"] + [s.quantity_tag for s in series]
        rows = zip(times, *[s.values for s in series])
    else:
        keys = [k for k in series[0] if k != "time"]
        header = ["time"] + keys
        rows = ([d["time"]] + [d[k] for k in keys] for d in series)
    write_table(path, header, rows)


def read_series(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header, np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))


# -- rate report ----------------------------------------------------------


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_rate_report(report: RateReport, path) -> None:
    text = json.dumps(_json_safe(report.as_dict()), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_rate_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


@dataclass
class OutputLayout:
    """Where a command writes its files."""

    root: Path
    files: list = field(default_factory=list)

    def path(self, *parts) -> Path:
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p
