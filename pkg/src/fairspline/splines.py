"""B-spline curves and surfaces on clamped knot vectors.

Basis evaluation uses the Cox-de Boor recursion with derivatives up to
order three. Parameters live in [0, 1]. Evaluation at an interior knot
takes the right-sided limit; t = 1 takes the left-sided limit so the
basis is defined on the closed interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "DegenerateDataError",
    "InvalidSizeError",
    "KnotVector",
    "SplineCurve",
    "SplineSurface",
    "DataSet",
    "basis_all",
    "chord_length_params",
    "centripetal_params",
    "select_initial_controls",
    "make_knot_vector",
    "insert_knot",
    "grid_to_rows",
    "rows_to_grid",
]


class DomainError(ValueError):
    """Parameter outside the spline domain [0, 1]."""


class DegenerateDataError(ValueError):
    """Data admits no usable parametrization (all points coincide)."""


class InvalidSizeError(ValueError):
    """Control count incompatible with the data size or the degree."""


def _readonly(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot vector of length n + degree + 1 on [0, 1]."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        if self.degree < 1:
            raise InvalidSizeError(f"degree must be >= 1, got {self.degree}")
        object.__setattr__(self, "knots", _readonly(self.knots))
        k = self.knots
        p = self.degree
        if k.ndim != 1 or k.size < 2 * (p + 1):
            raise InvalidSizeError(
                f"need at least {2 * (p + 1)} knots for degree {p}, got {k.size}"
            )
        if np.any(np.diff(k) < 0.0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(k[: p + 1] == 0.0) and np.all(k[-(p + 1):] == 1.0)):
            raise ValueError("knot vector must be clamped to [0, 1]")

    @property
    def n(self) -> int:
        """Number of basis functions / control points."""
        return self.knots.size - self.degree - 1

    def span(self, t: float) -> int:
        """Index k with knots[k] <= t < knots[k+1] (left limit at t = 1)."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"parameter {t} outside [0, 1]")
        k = int(np.searchsorted(self.knots, t, side="right")) - 1
        k = min(k, self.n - 1)
        while self.knots[k + 1] <= self.knots[k]:
            k -= 1
        return k

    def multiplicity(self, u: float) -> int:
        return int(np.count_nonzero(self.knots == u))

    def spans(self) -> list[tuple[int, float, float]]:
        """Nonempty spans as (index, left, right)."""
        k = self.knots
        return [
            (i, float(k[i]), float(k[i + 1]))
            for i in range(self.degree, self.n)
            if k[i + 1] > k[i]
        ]


def _basis_ders(kv: KnotVector, span: int, t: float, r: int) -> np.ndarray:
    """Values and derivatives of the p+1 basis functions active on a span.

    Returns an (r+1, p+1) array: row q holds the order-q derivatives of
    N_{span-p}, ..., N_{span} at t.
    """
    p = kv.degree
    knots = kv.knots
    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = t - knots[span + 1 - j]
        right[j] = knots[span + j] - t
        saved = 0.0
        for i in range(j):
            ndu[j, i] = right[i + 1] + left[j - i]
            temp = ndu[i, j - 1] / ndu[j, i]
            ndu[i, j] = saved + right[i + 1] * temp
            saved = left[j - i] * temp
        ndu[j, j] = saved

    ders = np.zeros((r + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for i in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for q in range(1, r + 1):
            d = 0.0
            rk = i - q
            pk = p - q
            if i >= q:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = q - 1 if i - 1 <= pk else p - i
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if i <= pk:
                a[s2, q] = -a[s1, q - 1] / ndu[pk + 1, i]
                d += a[s2, q] * ndu[i, pk]
            ders[q, i] = d
            s1, s2 = s2, s1

    factor = float(p)
    for q in range(1, r + 1):
        ders[q, :] *= factor
        factor *= p - q
    return ders


def basis_all(kv: KnotVector, t: float, r: int = 0) -> tuple[int, np.ndarray]:
    """Active basis derivatives of order r at t.

    Returns (start, values) where values[i] = d^r/dt^r N_{start+i}(t) for
    the degree+1 active functions; all other basis functions vanish at t.
    """
    if r < 0 or r > kv.degree:
        raise ValueError(f"derivative order {r} outside 0..{kv.degree}")
    span = kv.span(t)
    ders = _basis_ders(kv, span, t, r)
    return span - kv.degree, ders[r]


@dataclass(frozen=True)
class SplineCurve:
    knots: KnotVector
    control: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control", _readonly(self.control))
        if self.control.ndim != 2:
            raise InvalidSizeError("control points must be an (n, d) array")
        if self.control.shape[0] != self.knots.n:
            raise InvalidSizeError(
                f"knot vector supports {self.knots.n} control points, "
                f"got {self.control.shape[0]}"
            )
        if self.knots.n < self.knots.degree + 1:
            raise InvalidSizeError("need at least degree+1 control points")
        if not np.all(np.isfinite(self.control)):
            raise ValueError("control points must be finite")

    @property
    def dim(self) -> int:
        return self.control.shape[1]

    def eval(self, t: float, r: int = 0) -> np.ndarray:
        start, vals = basis_all(self.knots, t, r)
        return vals @ self.control[start:start + vals.size]

    def eval_many(self, ts: np.ndarray, r: int = 0) -> np.ndarray:
        return np.array([self.eval(float(t), r) for t in np.asarray(ts)])


@dataclass(frozen=True)
class SplineSurface:
    """Tensor-product patch; control rows ordered with the s index major.

    Control row j corresponds to grid cell (h, l) with j = h * n_t + l,
    h indexing the s direction and l the t direction.
    """

    knots_s: KnotVector
    knots_t: KnotVector
    control: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control", _readonly(self.control))
        n = self.knots_s.n * self.knots_t.n
        if self.control.ndim != 2 or self.control.shape[0] != n:
            raise InvalidSizeError(
                f"expected {n} control rows for the knot vectors, "
                f"got {self.control.shape}"
            )
        if not np.all(np.isfinite(self.control)):
            raise ValueError("control points must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.knots_s.n, self.knots_t.n

    def eval(self, s: float, t: float, rs: int = 0, rt: int = 0) -> np.ndarray:
        n2 = self.knots_t.n
        s0, sv = basis_all(self.knots_s, s, rs)
        t0, tv = basis_all(self.knots_t, t, rt)
        out = np.zeros(self.control.shape[1])
        for i, a in enumerate(sv):
            row = (s0 + i) * n2 + t0
            out += a * (tv @ self.control[row:row + tv.size])
        return out


def grid_to_rows(grid: np.ndarray) -> np.ndarray:
    """Flatten an (n1, n2, d) grid to (n1*n2, d) rows, s index major."""
    n1, n2, d = grid.shape
    return grid.reshape(n1 * n2, d)


def rows_to_grid(rows: np.ndarray, n1: int, n2: int) -> np.ndarray:
    return rows.reshape(n1, n2, rows.shape[1])


@dataclass(frozen=True)
class DataSet:
    """Points to fit plus their parameters.

    Curve data carries one parameter per point; surface data carries an
    (s, t) pair per point, with rows ordered lexicographically in (s, t).
    Parameters are normalized to span [0, 1] on construction.
    """

    points: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        prm = np.array(self.params, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise InvalidSizeError("points must be (m, 2) or (m, 3)")
        if prm.shape[0] != pts.shape[0]:
            raise InvalidSizeError("one parameter (pair) per point required")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(prm))):
            raise ValueError("points and parameters must be finite")
        if prm.ndim == 1:
            if np.any(np.diff(prm) < 0.0):
                raise ValueError("curve parameters must be nondecreasing")
            prm = _normalize_01(prm)
        elif prm.ndim == 2 and prm.shape[1] == 2:
            prm = np.column_stack([_normalize_01(prm[:, 0]), _normalize_01(prm[:, 1])])
        else:
            raise InvalidSizeError("params must be (m,) or (m, 2)")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "params", _readonly(prm))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_surface(self) -> bool:
        return self.params.ndim == 2


def _normalize_01(t: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(t)), float(np.max(t))
    if hi <= lo:
        raise DegenerateDataError("parameters span a single value")
    if lo == 0.0 and hi == 1.0:
        return t
    return (t - lo) / (hi - lo)


def _accumulated_params(points: np.ndarray, alpha: float) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise InvalidSizeError("need at least two points to parametrize")
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1) ** alpha
    total = float(np.sum(steps))
    if total <= 0.0:
        raise DegenerateDataError("all points coincide")
    t = np.concatenate([[0.0], np.cumsum(steps)]) / total
    t[-1] = 1.0
    return t


def chord_length_params(points: np.ndarray) -> np.ndarray:
    """Parameters proportional to accumulated chord length, in [0, 1]."""
    return _accumulated_params(points, 1.0)


def centripetal_params(points: np.ndarray) -> np.ndarray:
    """Square-root chord variant; damps parameter jumps at sharp turns."""
    return _accumulated_params(points, 0.5)


def select_initial_controls(
    data: DataSet, n: int, degree: int = 3
) -> tuple[np.ndarray, np.ndarray]:
    """Pick n data points, evenly spread by index, as starting controls.

    Returns (indices, control) with 0-based strictly increasing indices;
    the first and last data points are always included. Halves round up.
    """
    if data.is_surface:
        raise InvalidSizeError("index selection applies to curve data")
    m = data.m
    if n > m:
        raise InvalidSizeError(f"cannot select {n} controls from {m} points")
    if n < degree + 1:
        raise InvalidSizeError(f"need at least degree+1={degree + 1} controls")
    j = np.arange(n, dtype=float)
    idx = np.floor(j * (m - 1) / (n - 1) + 0.5).astype(int)
    return idx, data.points[idx].copy()


def make_knot_vector(
    params: np.ndarray, indices: np.ndarray, degree: int = 3
) -> KnotVector:
    """Clamped knot vector whose interior knots average the selected params.

    Interior knot i (0-based, i = 0 .. n-degree-2) is the mean of the
    degree consecutive selected parameters at positions i+1 .. i+degree.
    """
    sel = np.asarray(params, dtype=float)[np.asarray(indices, dtype=int)]
    n = sel.size
    p = degree
    if n < p + 1:
        raise InvalidSizeError(f"need at least degree+1={p + 1} selections")
    interior = [float(np.mean(sel[i + 1:i + 1 + p])) for i in range(n - p - 1)]
    knots = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return KnotVector(p, knots)


def insert_knot(curve: SplineCurve, u: float) -> SplineCurve:
    """Insert one knot at u without changing the traced curve (Boehm).

    Refuses u at an existing knot of multiplicity degree, which would
    let the curve lose C0 continuity there.
    """
    if not 0.0 < u < 1.0:
        raise DomainError(f"new knot {u} must lie strictly inside (0, 1)")
    kv = curve.knots
    p = kv.degree
    if kv.multiplicity(u) >= p:
        raise ValueError(f"knot {u} already has multiplicity {p}")
    knots = kv.knots
    k = kv.span(u)
    old = curve.control
    n = old.shape[0]
    new = np.empty((n + 1, old.shape[1]))
    new[:k - p + 1] = old[:k - p + 1]
    for i in range(k - p + 1, k + 1):
        denom = knots[i + p] - knots[i]
        alpha = (u - knots[i]) / denom if denom > 0.0 else 0.0
        new[i] = alpha * old[i] + (1.0 - alpha) * old[i - 1]
    new[k + 1:] = old[k:]
    new_knots = np.insert(knots, k + 1, u)
    return SplineCurve(KnotVector(p, new_knots), new)
