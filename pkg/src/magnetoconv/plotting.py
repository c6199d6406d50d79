"""Figures for sweep and layer reports (matplotlib, rendered off-screen)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_rates(report, path) -> None:
    """Log-log sup-error against eps per quantity, with the theoretical slope as a dashed guide."""
    tags = list(report.entries)
    ncol = min(3, len(tags))
    nrow = -(-len(tags) // ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 3.3 * nrow), squeeze=False)
    for ax, tag in zip(axes.flat, tags):
        e = report.entries[tag]
        eps = np.array([p[0] for p in e.points])
        err = np.array([p[1] for p in e.points])
        ax.loglog(eps, err, "o-", label=f"slope {e.slope:.3f}")
        guide = err[0] * (eps / eps[0]) ** e.theory_slope
        ax.loglog(eps, guide, "k--", lw=0.8, label=f"eps^{e.theory_slope:g}")
        status = "floored" if e.floored else ("pass" if e.passed else "FAIL")
        if not e.gated:
            status += ", report only"
        ax.set_title(f"{tag} ({status})", fontsize=9)
        ax.set_xlabel("eps")
        ax.legend(fontsize=7)
    for ax in list(axes.flat)[len(tags):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_layer(profiles, path) -> None:
    """Profiles ``t |u - u0|_H2^2`` per eps, with the cut-off ``eps^(1-alpha)`` marked."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for p in profiles:
        (line,) = ax.semilogy(p.times[1:], np.maximum(p.values[1:], 1e-300), label=f"eps={p.epsilon:g}")
        ax.axvline(p.threshold, color=line.get_color(), ls=":", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("t |u - u0|_H2^2")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def gnuplot_script(csv_name: str, tags, png_name: str = "rates_gnuplot.png") -> str:
    """Self-contained gnuplot script plotting the ``(eps, sup error)`` columns of ``csv_name``."""
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set key left top",
        "set xlabel 'eps'",
        "set ylabel 'sup-in-time error'",
        "set terminal pngcairo size 900,650",
        f"set output '{png_name}'",
    ]
    plots = [
        f"'{csv_name}' using 1:{2 + 2 * i} with linespoints title '{tag}'" for i, tag in enumerate(tags)
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
