"""Fairness inspection: curvature, curvature combs, mean curvature maps,
and the second-difference rule for picking smoothing weights.

Curvature of a planar curve is |x'y'' - y'x''| / ||P'||^3; for a space
curve it is ||P' x P''|| / ||P'||^3. Comb teeth point along -kappa * n
where n is the leftward normal of P' (planar) or the Frenet normal
(space), so teeth sit on the concave side of the trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .splines import DataSet, SplineCurve, SplineSurface

__all__ = [
    "UndefinedSampleError",
    "CombSample",
    "CurvatureComb",
    "CurvatureMap",
    "curvature",
    "curvature_comb",
    "mean_curvature",
    "mean_curvature_map",
    "second_difference_weights",
]

# First-derivative magnitudes at or below this are treated as a cusp and
# the sample is reported undefined rather than divided through.
_SPEED_FLOOR = 1e-12
_METRIC_FLOOR = 1e-14


class UndefinedSampleError(ValueError):
    """The requested quantity is undefined at this parameter value."""


def _curvature_parts(curve: SplineCurve, t: float) -> tuple[float, np.ndarray]:
    """(kappa, unit normal) at t; raises where the first derivative dies."""
    d1 = curve.eval(t, 1)
    d2 = curve.eval(t, 2)
    speed = float(np.linalg.norm(d1))
    if speed <= _SPEED_FLOOR:
        raise UndefinedSampleError(
            f"curvature undefined at t={t!r}: first derivative vanishes"
        )
    if d1.size == 2:
        signed = (d1[0] * d2[1] - d1[1] * d2[0]) / speed**3
        normal = np.array([-d1[1], d1[0]]) / speed
        return abs(signed), normal
    cross = np.cross(d1, d2)
    kappa = float(np.linalg.norm(cross)) / speed**3
    # Frenet normal: component of P'' orthogonal to the tangent. For a
    # straight stretch it is undefined; report a zero normal there, which
    # still yields the correct zero-length tooth.
    tangent = d1 / speed
    perp = d2 - (d2 @ tangent) * tangent
    norm = float(np.linalg.norm(perp))
    if norm <= _SPEED_FLOOR:
        return kappa, np.zeros(3)
    return kappa, perp / norm


def curvature(curve: SplineCurve, t: float) -> float:
    kappa, _ = _curvature_parts(curve, t)
    return kappa


@dataclass(frozen=True)
class CombSample:
    t: float
    point: np.ndarray
    curvature: float
    normal: np.ndarray
    tooth_end: np.ndarray

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "point": self.point.tolist(),
            "curvature": self.curvature,
            "normal": self.normal.tolist(),
            "tooth_end": self.tooth_end.tolist(),
        }


@dataclass(frozen=True)
class CurvatureComb:
    """Curvature teeth sampled uniformly in parameter.

    Samples where the curvature is undefined (vanishing first derivative)
    are omitted rather than filled in.
    """

    samples: list[CombSample] = field(default_factory=list)
    scale: float = 1.0

    def max_curvature(self) -> float:
        return max((s.curvature for s in self.samples), default=0.0)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "samples": [s.to_dict() for s in self.samples],
        }


def curvature_comb(
    curve: SplineCurve, sample_count: int, scale: float
) -> CurvatureComb:
    if sample_count < 2:
        raise ValueError("a comb needs at least two samples")
    if not scale > 0:
        raise ValueError("comb scale must be positive")
    samples = []
    for t in np.linspace(0.0, 1.0, sample_count):
        try:
            kappa, normal = _curvature_parts(curve, float(t))
        except UndefinedSampleError:
            continue
        point = curve.eval(float(t))
        samples.append(
            CombSample(
                t=float(t),
                point=point,
                curvature=kappa,
                normal=normal,
                tooth_end=point - scale * kappa * normal,
            )
        )
    return CurvatureComb(samples=samples, scale=scale)


def mean_curvature(surface: SplineSurface, s: float, t: float) -> float:
    """Mean curvature H from the two fundamental forms.

    H = (E*N2 - 2*F*M + G*L) / (2*(E*G - F^2)) with first form (E, F, G)
    and second form (L, M, N2) taken against the unit surface normal.
    """
    ss = surface.eval(s, t, 1, 0)
    st = surface.eval(s, t, 0, 1)
    e = float(ss @ ss)
    f = float(ss @ st)
    g = float(st @ st)
    det = e * g - f * f
    if det <= _METRIC_FLOOR:
        raise UndefinedSampleError(
            f"mean curvature undefined at (s={s!r}, t={t!r}): "
            "degenerate first fundamental form"
        )
    normal = np.cross(ss, st)
    normal /= np.linalg.norm(normal)
    l = float(surface.eval(s, t, 2, 0) @ normal)
    m = float(surface.eval(s, t, 1, 1) @ normal)
    n2 = float(surface.eval(s, t, 0, 2) @ normal)
    return (e * n2 - 2.0 * f * m + g * l) / (2.0 * det)


@dataclass(frozen=True)
class CurvatureMap:
    """Grid of |H| samples for display, clamped at clamp_max.

    ``values`` holds the clamped magnitudes; ``raw`` keeps the original
    ones so statistics never see the display clamp. NaN marks samples
    where the metric degenerated.
    """

    s_params: np.ndarray
    t_params: np.ndarray
    values: np.ndarray
    raw: np.ndarray
    clamp_max: float

    def to_dict(self) -> dict:
        return {
            "s_params": self.s_params.tolist(),
            "t_params": self.t_params.tolist(),
            "values": self.values.tolist(),
            "raw": self.raw.tolist(),
            "clamp_max": self.clamp_max,
        }


def mean_curvature_map(
    surface: SplineSurface,
    s_count: int = 50,
    t_count: int = 50,
    clamp_max: float | None = None,
) -> CurvatureMap:
    """Sample |H| on a uniform grid; clamp_max defaults to the grid max."""
    if s_count < 2 or t_count < 2:
        raise ValueError("curvature map needs at least a 2x2 grid")
    s_params = np.linspace(0.0, 1.0, s_count)
    t_params = np.linspace(0.0, 1.0, t_count)
    raw = np.empty((s_count, t_count))
    for i, s in enumerate(s_params):
        for j, t in enumerate(t_params):
            try:
                raw[i, j] = abs(mean_curvature(surface, float(s), float(t)))
            except UndefinedSampleError:
                raw[i, j] = np.nan
    if clamp_max is None:
        finite = raw[np.isfinite(raw)]
        clamp_max = float(finite.max()) if finite.size else 0.0
    values = np.where(raw > clamp_max, clamp_max, raw)
    return CurvatureMap(
        s_params=s_params,
        t_params=t_params,
        values=values,
        raw=raw,
        clamp_max=float(clamp_max),
    )


def second_difference_weights(
    data: DataSet,
    control_indices: np.ndarray,
    high_count: int,
    high_omega: float,
    base_omega: float,
) -> np.ndarray:
    """Smoothing weights from the second differences of the data polygon.

    Each selected control point scores ||Q_{i+1} - 2 Q_i + Q_{i-1}|| at its
    data index (0 at the data endpoints). The high_count highest-scoring
    control points receive high_omega, everything else base_omega. Ties go
    to the lower control index, and a zero score never earns the high
    weight -- perfectly flat regions stay at the base.
    """
    for name, value in (("high_omega", high_omega), ("base_omega", base_omega)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    idx = np.asarray(control_indices, dtype=int)
    if high_count < 0 or high_count > idx.size:
        raise ValueError(
            f"high_count must lie in 0..{idx.size}, got {high_count}"
        )
    points = data.points
    m = points.shape[0]
    if np.any(idx < 0) or np.any(idx >= m):
        raise ValueError("control indices outside the data range")
    scores = np.zeros(idx.size)
    interior = (idx > 0) & (idx < m - 1)
    inner = idx[interior]
    second = points[inner + 1] - 2.0 * points[inner] + points[inner - 1]
    scores[interior] = np.linalg.norm(second, axis=1)
    omega = np.full(idx.size, float(base_omega))
    order = np.argsort(-scores, kind="stable")
    top = order[:high_count]
    omega[top[scores[top] > 0.0]] = float(high_omega)
    return omega
