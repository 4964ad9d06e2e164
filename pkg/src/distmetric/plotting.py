"""Render sweep curves to image files.

Figures are a side artifact of the CLI report path; the CSV stays the
canonical output. Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np

from .sweep import SweepCurve

_METRIC_STYLE = {"FSD": ("tab:blue", "o"), "SMMD": ("tab:orange", "s")}


def _grouped(curve: SweepCurve) -> dict[str, dict[float, list[float]]]:
    by_metric: dict[str, dict[float, list[float]]] = {}
    for p in curve.points:
        by_metric.setdefault(p.metric, {}).setdefault(p.condition, []).append(p.value)
    return by_metric


def render_curve_figure(
    curve: SweepCurve,
    path: Path | str,
    x_label: str,
    y_label: str = "metric value",
    title: str = "",
    log_y: bool = False,
    reverse_x: bool = False,
) -> Path:
    """Plot one line per metric (mean over repeats, repeats as dots)."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for metric, per_cond in sorted(_grouped(curve).items()):
        color, marker = _METRIC_STYLE.get(metric, ("tab:gray", "."))
        conds = sorted(per_cond)
        means = [float(np.mean(per_cond[c])) for c in conds]
        for c in conds:
            vals = per_cond[c]
            if len(vals) > 1:
                ax.plot([c] * len(vals), vals, marker, color=color, alpha=0.25, ms=3)
        ax.plot(conds, means, marker + "-", color=color, label=metric)
    if log_y:
        ax.set_yscale("log")
    if reverse_x:
        ax.invert_xaxis()
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
