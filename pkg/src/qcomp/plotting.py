"""PNG figures drawn from the aggregated CSV data.

Uses the non-interactive Agg backend; nothing is shown on screen.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 8,
    "savefig.bbox": "tight",
}
LABELS = {"baseline": "total-power design", "pa": "per-antenna minimax"}
MARKERS = {"baseline": "s", "pa": "o"}
LINESTYLES = {"baseline": "--", "pa": "-"}


def _save(fig, path: Path) -> Path:
    fig.savefig(path)
    plt.close(fig)
    return path


def max_power_vs_sinr(summary: list, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        curves: dict = {}
        for s in summary:
            curves.setdefault((s["algorithm"], s["bits"]), []).append((s["sinr_db"], s["max_antenna_power_dBm_mean"]))
        for (algo, bits), pts in curves.items():
            pts.sort()
            x, y = zip(*pts)
            ax.plot(x, y, marker=MARKERS[algo], linestyle=LINESTYLES[algo], label=f"{LABELS[algo]}, b={bits}")
        ax.set_xlabel("target SINR [dB]")
        ax.set_ylabel("max antenna power [dBm]")
        ax.legend()
        return _save(fig, path)


def antenna_cdf(cdf: list, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        series: dict = {}
        for row in cdf:
            series.setdefault((row["algorithm"], row["sinr_db"], row["bits"], row["realization"]), []).append(
                (row["antenna_power_dBm"], row["cdf"])
            )
        for (algo, sinr_db, bits, r), pts in series.items():
            x, y = zip(*pts)
            ax.step(x, y, where="post", linestyle=LINESTYLES[algo], label=f"{LABELS[algo]}, {sinr_db:g} dB, b={bits}, r={r}")
        ax.set_xlabel("antenna power [dBm]")
        ax.set_ylabel("empirical CDF")
        ax.set_ylim(0.0, 1.02)
        ax.legend(loc="lower right")
        return _save(fig, path)


def papr_bars(papr: list, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = len(papr)
        xs = range(n)
        ax.bar([x - 0.2 for x in xs], [p["papr_baseline_dB"] for p in papr], width=0.4, label=LABELS["baseline"])
        ax.bar([x + 0.2 for x in xs], [p["papr_pa_dB"] for p in papr], width=0.4, label=LABELS["pa"])
        ax.set_xticks(list(xs))
        ax.set_xticklabels([f"{p['sinr_db']:g} dB, b={p['bits']}" for p in papr])
        ax.set_ylabel("mean PAPR [dB]")
        ax.legend()
        return _save(fig, path)


def convergence(trace: list, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = [t["iteration"] for t in trace]
        ax.plot(n, [t["max_antenna_power_mW"] for t in trace], label="max antenna power")
        ax.plot(n, [t["dual_bound_per_antenna_mW"] for t in trace], linestyle="--", label="dual bound")
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("power [mW]")
        ax.set_yscale("log")
        ax.legend()
        return _save(fig, path)


def render(preset: str, out_dir, *, summary=None, cdf=None, papr=None, trace=None) -> list:
    """Draw the figures that make sense for ``preset``; returns their paths."""
    out = Path(out_dir)
    paths = []
    if summary and len({s["sinr_db"] for s in summary}) > 1:
        paths.append(max_power_vs_sinr(summary, out / "max_power_vs_sinr.png"))
    if cdf:
        paths.append(antenna_cdf(cdf, out / "antenna_cdf.png"))
    if papr:
        paths.append(papr_bars(papr, out / "papr_table.png"))
    if trace:
        paths.append(convergence(trace, out / "trace.png"))
    return paths
