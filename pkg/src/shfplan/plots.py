"""Figure rendering for solve and sweep reports.

CSV files remain the machine-readable contract; these PNGs are rendered
alongside them for quick inspection. The Agg backend keeps rendering
headless-safe.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["sweep_figure", "trajectory_figure"]

ALGO_STYLE = {
    "optimal": dict(color="tab:red", marker="o", label="optimal hover-and-fly"),
    "sca": dict(color="tab:blue", marker="s", label="SCA (time quantized)"),
    "heuristic": dict(color="tab:green", marker="^", label="heuristic hover-and-fly"),
    "upper_bound": dict(color="black", marker="x", linestyle="--", label="speed-free upper bound"),
}

SWEEP_LABEL = {"T": "charging duration T (s)", "V": "speed limit V (m/s)"}


def sweep_figure(averages, sweep_param: str, path):
    """Average min-energy per algorithm against the swept parameter.

    averages: mapping algorithm -> list of (sweep_value, mean_min_energy).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for algo in ("upper_bound", "optimal", "sca", "heuristic"):
        if algo not in averages:
            continue
        pts = sorted(averages[algo])
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, **ALGO_STYLE[algo])
    ax.set_xlabel(SWEEP_LABEL.get(sweep_param, sweep_param))
    ax.set_ylabel("average min received energy (J)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def trajectory_figure(traces, node_positions, path):
    """Position-vs-time profiles of the computed trajectories.

    traces: mapping algorithm -> (n, 2) array of (t_seconds, x_meters).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for algo, rows in traces.items():
        style = ALGO_STYLE.get(algo, dict(label=algo))
        style = {k: v for k, v in style.items() if k != "marker"}
        ax.plot(rows[:, 0], rows[:, 1], **style)
    for wx in node_positions:
        ax.axhline(wx, color="gray", alpha=0.4, linewidth=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("UAV position (m)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
