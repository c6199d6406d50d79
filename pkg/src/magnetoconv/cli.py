"""Command-line entry point: ``magnetoconv {run,sweep,verify,layer}``.

Exit status: 0 when every gated check passes, 1 on a gated failure or a
failed simulation, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import convergence, io, plotting, verification
from .dynamics import MODELS, SimulationError, run_model

LAYER_BAND = 4.0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magnetoconv", description=__doc__.splitlines()[0],
                                epilog=io.schema_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate one model, write diagnostics and snapshots")
    run.add_argument("--config", required=True)
    run.add_argument("--model", choices=MODELS)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--out")

    sweep = sub.add_parser("sweep", help="epsilon sweep and convergence-rate fits")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out")

    verify = sub.add_parser("verify", help="oracle and property checks")
    verify.add_argument("--config", required=True)

    layer = sub.add_parser("layer", help="initial-layer thickness diagnostic")
    layer.add_argument("--config", required=True)
    layer.add_argument("--alpha", type=float)
    layer.add_argument("--out")
    return p


def _layout(cfg, args) -> io.OutputLayout:
    return io.OutputLayout(Path(getattr(args, "out", None) or cfg.out_dir))


def cmd_run(cfg, args) -> int:
    overrides = {}
    if args.model:
        overrides["model"] = args.model
    if args.epsilon is not None:
        overrides["epsilon"] = args.epsilon
    try:
        params = cfg.params(**overrides)
    except ValueError as exc:
        raise io.ConfigError(str(exc)) from None
    snaps = sorted(set(cfg.snapshot_times) | {0.0, params.T})
    traj = run_model(params, snapshot_times=snaps)
    out = _layout(cfg, args)
    io.write_series(traj.diagnostics, out.path("diagnostics.csv"))
    for s in traj.states:
        io.write_snapshot(s, out.path("snapshots", f"{params.model}_t{s.t:.6f}.bin"), params.L, params.epsilon)
    io.save_config(replace(cfg, **overrides), out.path("config.json"))
    last = traj.diagnostics[-1]
    print(f"{params.model} eps={params.epsilon:g} T={params.T:g}: "
          + ", ".join(f"{k}={last[k]:.6e}" for k in ("u_L2", "B_L2", "theta_L2", "theta_Linf")))
    print(f"wrote {len(out.files)} files under {out.root}")
    return 0


def write_sweep_outputs(report, out: io.OutputLayout) -> None:
    tags = list(report.entries)
    io.write_rate_report(report, out.path("rate_report.json"))
    header = ["epsilon"] + [f"{t}{suffix}" for t in tags for suffix in (" sup", " final")]
    rows = []
    for i, eps in enumerate(report.eps_list):
        row = [eps]
        for t in tags:
            row += list(report.entries[t].points[i][1:])
        rows.append(row)
    io.write_table(out.path("rates.csv"), header, rows)
    out.path("rates.gp").write_text(plotting.gnuplot_script("rates.csv", tags), encoding="utf-8")
    for i, eps in enumerate(report.eps_list):
        io.write_series(report.series[eps], out.path(f"eps_{i}", "errors.csv"))
    keys = list(next(iter(report.bounds.values())))
    io.write_table(out.path("bounds.csv"), ["epsilon"] + keys,
                   [[eps] + [report.bounds[eps][k] for k in keys] for eps in report.eps_list])
    alphas = sorted({a for _, a in report.layers})
    io.write_table(out.path("layer.csv"), ["epsilon"] + [f"M alpha={a:g}" for a in alphas],
                   [[eps] + [report.layers[(eps, a)].peak for a in alphas] for eps in report.eps_list])
    plotting.plot_rates(report, out.path("rates.png"))
    plotting.plot_layer([report.layers[(e, alphas[0])] for e in report.eps_list], out.path("layer.png"))


def cmd_sweep(cfg, args) -> int:
    report = convergence.sweep_epsilon(
        cfg.params(), cfg.eps_list, list(cfg.quantities),
        progress=lambda eps: print(f"  eps={eps:g} done", flush=True),
    )
    out = _layout(cfg, args)
    write_sweep_outputs(report, out)
    for tag, e in report.entries.items():
        status = "floored" if e.floored else ("pass" if e.passed else "FAIL")
        gate = "" if e.gated else " (report only)"
        print(f"{status:7s} {tag:20s} slope {e.slope:.3f} theory {e.theory_slope:g} residual {e.residual:.3f}{gate}")
    print(f"wrote {len(out.files)} files under {out.root}")
    return 0 if report.passed else 1


def cmd_verify(cfg, args) -> int:
    checks = verification.run_all(cfg.params())
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def cmd_layer(cfg, args) -> int:
    alpha = cfg.alpha if args.alpha is None else args.alpha
    if not 0 < alpha < 1:
        raise io.ConfigError("must lie in (0, 1)", "alpha")
    base = cfg.params()
    limit = run_model(replace(base, model="limit"))
    profiles = []
    for eps in cfg.eps_list:
        full = run_model(replace(base, model="full", epsilon=eps))
        profiles.append(convergence.layer_diagnostic(full, limit, alpha))
    band = convergence.layer_band(profiles)
    out = _layout(cfg, args)
    io.write_table(out.path("layer.csv"), ["epsilon", "M", "M/epsilon"],
                   [[p.epsilon, p.peak, p.peak / p.epsilon] for p in profiles])
    for i, p in enumerate(profiles):
        io.write_table(out.path(f"eps_{i}", "layer_profile.csv"), ["time", "t*|u-u0|_H2^2"],
                       zip(p.times, p.values))
    plotting.plot_layer(profiles, out.path("layer.png"))
    for p in profiles:
        print(f"eps={p.epsilon:g}  M={p.peak:.6e}  M/eps={p.peak / p.epsilon:.6e}")
    ok = band <= LAYER_BAND
    print(f"{'PASS' if ok else 'FAIL'}  max(M/eps)/min(M/eps) = {band:.3f} (limit {LAYER_BAND:g})")
    return 0 if ok else 1


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "layer": cmd_layer}


def cli_main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = io.load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (io.ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(io.schema_help(), file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
