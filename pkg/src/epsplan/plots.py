"""Figure rendering for bench reports.

Takes the aggregate rows the harness produces and renders them to image
files next to the delimited output. Kept separate from the harness so data
emission never depends on a display stack.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _series_by(rows: Sequence[tuple], key_index: int, x_index: int, y_index: int):
    series: dict = {}
    for row in rows:
        series.setdefault(row[key_index], []).append((row[x_index], row[y_index]))
    for key in series:
        series[key].sort()
    return series


def plot_expensive_ratio(
    rows: Sequence[tuple[float, float, float, int]],
    path: Union[str, Path],
) -> Path:
    """Mean expensive-call ratio vs epsilon, one curve per p1, with the
    use-everything baseline at ratio 1."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for p1, points in sorted(_series_by(rows, 1, 0, 2).items()):
        ax.plot(*zip(*points), marker="o", markersize=3, label=f"p1={p1:g}")
    ax.axhline(1.0, color="black", linewidth=1.5, label="indifferent")
    ax.set_xlabel("target bound epsilon")
    ax.set_ylabel("expensive estimations used / available")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_eta(
    rows: Sequence[tuple[float, float, float, int]],
    path: Union[str, Path],
) -> Path:
    """Mean achieved ratio vs epsilon, one curve per p1, against the target
    diagonal."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    epsilons = sorted({row[0] for row in rows})
    if epsilons:
        ax.plot(epsilons, epsilons, linestyle="--", color="gray", label="target")
    for p1, points in sorted(_series_by(rows, 1, 0, 2).items()):
        ax.plot(*zip(*points), marker="o", markersize=3, label=f"p1={p1:g}")
    ax.set_xlabel("target bound epsilon")
    ax.set_ylabel("mean achieved ratio")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def plot_projected_runtime(
    rows: Sequence[tuple[float, float, float, int]],
    path: Union[str, Path],
) -> Path:
    """Mean projected runtime vs epsilon, one curve per assumed per-call
    estimation latency, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for tau, points in sorted(_series_by(rows, 1, 0, 2).items()):
        ax.plot(*zip(*points), marker="o", markersize=3, label=f"tau={tau:g} ms")
    ax.set_xlabel("target bound epsilon")
    ax.set_ylabel("projected runtime [ms]")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
