"""Deterministic SVG export of planar curves with combs and data points.

The writer emits the same bytes for the same inputs: coordinates are
formatted with shortest round-trip repr and no timestamps or ids are
embedded. Space curves are not drawable here; export their JSON instead.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .metrics import CurvatureComb
from .splines import DataSet, SplineCurve

__all__ = ["UnsupportedGeometryError", "export_svg"]

CURVE_SAMPLES = 400
_MARGIN = 0.05  # fraction of the larger bounding-box side


class UnsupportedGeometryError(ValueError):
    """Geometry that has no SVG rendering (space curves)."""


def _fmt(x: float) -> str:
    return repr(round(float(x), 12))


def _polyline(points: np.ndarray) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)


def export_svg(
    curve: SplineCurve,
    comb: CurvatureComb | None,
    data: DataSet | None,
    path: str | Path,
) -> None:
    """Write curve polyline, comb teeth, and data circles to an SVG file."""
    if curve.control.shape[1] != 2:
        raise UnsupportedGeometryError(
            "only planar curves render to SVG; space curves export JSON only"
        )
    ts = np.linspace(0.0, 1.0, CURVE_SAMPLES)
    trace = curve.eval_many(ts)

    boxes = [trace]
    if data is not None:
        boxes.append(data.points)
    teeth = []
    if comb is not None:
        for s in comb.samples:
            teeth.append((s.point, s.tooth_end))
        if teeth:
            boxes.append(np.array([end for _, end in teeth]))
    stacked = np.vstack(boxes)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    span = hi - lo
    pad = _MARGIN * max(float(span.max()), 1e-9)
    lo = lo - pad
    hi = hi + pad

    def place(p: np.ndarray) -> tuple[float, float]:
        # SVG y grows downward; flip so the figure reads like a plot.
        return float(p[0]), float(hi[1] - (p[1] - lo[1]))

    width = hi[0] - lo[0]
    height = hi[1] - lo[1]
    stroke = 0.004 * max(float(width), float(height))
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(lo[0])} {_fmt(lo[1])} {_fmt(width)} {_fmt(height)}">\n',
    ]
    for start, end in teeth:
        x1, y1 = place(start)
        x2, y2 = place(end)
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"'
            f' stroke="#2e8b57" stroke-width="{_fmt(0.5 * stroke)}"/>\n'
        )
    placed = np.array([place(p) for p in trace])
    parts.append(
        f'<polyline points="{_polyline(placed)}" fill="none" stroke="#1f3a93"'
        f' stroke-width="{_fmt(stroke)}"/>\n'
    )
    if data is not None:
        for p in data.points:
            x, y = place(p)
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(1.2 * stroke)}"'
                ' fill="#b03a2e"/>\n'
            )
    parts.append("</svg>\n")
    Path(path).write_bytes("".join(parts).encode("ascii"))
