"""Report rendering helpers: convergence figures and trace tables.

Figures use the Agg backend so report generation works headless. The
trace CSV mirrors the figure data so results stay greppable without a
PNG viewer.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .iteration import IterationTrace

__all__ = ["save_trace_csv", "save_convergence_figure"]

_TRACE_HEADER = "k,fit_abs,energy_abs,fit_rel,energy_rel,iter_rel"


def save_trace_csv(trace_rows: np.ndarray, path: str | Path) -> None:
    """Write per-iteration metrics as CSV with round-trip float formatting."""
    lines = [_TRACE_HEADER]
    for k, row in enumerate(np.atleast_2d(trace_rows)):
        lines.append(f"{k}," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def save_convergence_figure(
    trace: IterationTrace | np.ndarray, path: str | Path, title: str = ""
) -> None:
    """Plot relative fitting error, energy, and iterative error against k."""
    rows = trace.table if isinstance(trace, IterationTrace) else np.asarray(trace)
    rows = np.atleast_2d(rows)
    k = np.arange(rows.shape[0])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(k, rows[:, 2], label="relative fitting error")
    ax.plot(k, rows[:, 3], label="relative energy")
    ax.plot(k, rows[:, 4], label="relative iterative error")
    positive = rows[:, 2:5][np.isfinite(rows[:, 2:5]) & (rows[:, 2:5] > 0)]
    if positive.size and positive.min() < 1e-3:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative value")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
