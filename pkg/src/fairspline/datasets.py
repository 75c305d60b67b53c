"""Analytic sample curves and point-set file formats.

Two analytic models are built in: a five-lobed "starfish" closed planar
curve and the Viviani figure-eight on a sphere, optionally perturbed by
seeded Gaussian noise. Point sets round-trip through CSV and JSON with
shortest-round-trip float formatting, so save followed by load is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .splines import DataSet

__all__ = [
    "PointFormatError",
    "sample_starfish",
    "sample_viviani",
    "gaussian_noise",
    "load_points",
    "save_points",
]


class PointFormatError(ValueError):
    """A point file does not match the expected CSV/JSON layout."""


def sample_starfish(m: int) -> DataSet:
    """m points of x = (1 + cos(5t)/5) cos t, y = (1 + cos(5t)/5) sin t.

    The curve is sampled uniformly in t over [0, 2*pi] inclusive of both
    ends, and the points carry the normalized sampling parameter.
    """
    if m < 4:
        raise ValueError(f"need at least 4 samples, got {m}")
    t = np.linspace(0.0, 2.0 * math.pi, m)
    radius = 1.0 + np.cos(5.0 * t) / 5.0
    points = np.column_stack([radius * np.cos(t), radius * np.sin(t)])
    return DataSet(points, t / t[-1])


def gaussian_noise(shape: tuple[int, ...], sigma: float, seed: int) -> np.ndarray:
    """Seeded zero-mean Gaussian deviates via the Box-Muller transform."""
    rng = np.random.default_rng(seed)
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    # 1 - u1 lies in (0, 1], keeping the log argument strictly positive.
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * math.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return sigma * z[:count].reshape(shape)


def sample_viviani(m: int, sigma: float = 0.0, seed: int = 0) -> DataSet:
    """m points of the Viviani curve, with per-coordinate Gaussian noise.

    Parametric form x = 2.5 (1 + cos u), y = 2.5 sin u, z = 5 sin(u/2)
    over u uniform in [0, 4*pi), traversing the figure-eight once. The
    noiseless points satisfy x^2 + y^2 + z^2 = 25 and x^2 + y^2 = 5x.
    sigma is the noise standard deviation; points carry the normalized
    sampling parameter.
    """
    if m < 4:
        raise ValueError(f"need at least 4 samples, got {m}")
    if sigma < 0:
        raise ValueError(f"noise level must be nonnegative, got {sigma!r}")
    u = 4.0 * math.pi * np.arange(m) / m
    points = np.column_stack(
        [
            2.5 * (1.0 + np.cos(u)),
            2.5 * np.sin(u),
            5.0 * np.sin(u / 2.0),
        ]
    )
    if sigma > 0:
        points = points + gaussian_noise(points.shape, sigma, seed)
    return DataSet(points, u / u[-1])


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def save_points(path: str | Path, data: DataSet) -> None:
    """Write a DataSet as CSV (.csv) or JSON (anything else).

    CSV rows are x,y for planar points or x,y,z[,param] for space points.
    Planar CSV keeps coordinates only -- use the JSON layout,
    {"dim": d, "points": [[...], ...], "params": [...]}, when the
    parameters must survive the trip.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if data.params.ndim != 1:
            raise PointFormatError(
                "surface grids do not fit the CSV row layout; use JSON"
            )
        rows = data.points
        if rows.shape[1] == 3:
            rows = np.column_stack([rows, data.params])
        elif rows.shape[1] != 2:
            raise PointFormatError(
                "CSV holds 2 columns (planar) or 3-4 columns (space"
                " [+ parameter]); use JSON for other layouts"
            )
        path.write_text("".join(_format_row(r) + "\n" for r in rows))
        return
    body = {"dim": data.points.shape[1], "points": data.points.tolist()}
    body["params"] = data.params.tolist()
    path.write_text(json.dumps(body) + "\n")


def _load_csv(path: Path) -> DataSet:
    points = []
    params = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
            if width not in (2, 3, 4):
                raise PointFormatError(
                    f"{path}:{lineno}: expected 2-4 comma-separated values,"
                    f" got {len(fields)}"
                )
        if len(fields) != width:
            raise PointFormatError(
                f"{path}:{lineno}: expected {width} values, got {len(fields)}"
            )
        try:
            row = [float(f) for f in fields]
        except ValueError as exc:
            raise PointFormatError(f"{path}:{lineno}: {exc}") from None
        if width == 4:
            points.append(row[:3])
            params.append(row[3])
        else:
            points.append(row)
    if width is None:
        raise PointFormatError(f"{path}: no points found")
    pts = np.array(points)
    if width == 4:
        return DataSet(pts, np.array(params))
    from .splines import chord_length_params

    return DataSet(pts, chord_length_params(pts))


def _load_json(path: Path) -> DataSet:
    try:
        body = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PointFormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(body, dict) or "points" not in body:
        raise PointFormatError(f"{path}: expected an object with 'points'")
    points = np.array(body["points"], dtype=float)
    if points.ndim != 2 or points.shape[1] not in (2, 3):
        raise PointFormatError(f"{path}: points must be an m x 2 or m x 3 array")
    if body.get("dim") not in (None, points.shape[1]):
        raise PointFormatError(
            f"{path}: dim {body['dim']} does not match {points.shape[1]}-wide rows"
        )
    if "params" in body:
        return DataSet(points, np.array(body["params"], dtype=float))
    from .splines import chord_length_params

    return DataSet(points, chord_length_params(points))


def load_points(path: str | Path) -> DataSet:
    """Read a DataSet saved by save_points (or hand-written in either format).

    Files without a parameter column get chord-length parameters.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _load_json(path)
    return _load_csv(path)
