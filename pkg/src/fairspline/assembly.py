"""Matrices behind the fairing iteration.

The iteration update for control points P given data Q is

    P[k+1] = (I - L A) P[k] + L (I - W) N^T Q,
    A      = (I - W) N^T N + W D_r,

with N the collocation matrix of basis values at the data parameters,
D_r the Gram matrix of order-r basis derivatives, W = diag(omega_j) the
per-control smoothing weights and L = diag(mu_j) the step sizes.
Everything is assembled dense; the intended scale is n <= 4096 controls.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .splines import KnotVector, _basis_ders, basis_all

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

__all__ = [
    "WeightConfig",
    "CollocationMatrix",
    "GramMatrix",
    "ContractionDiagnostics",
    "AssemblyBundle",
    "NonContractiveError",
    "collocation_matrix",
    "surface_collocation_matrix",
    "group_index_sets",
    "gram_matrix_curve",
    "gram_matrix_surface",
    "iteration_matrix",
    "normalization_weights",
    "contraction_diagnostics",
    "build_curve_bundle",
    "build_surface_bundle",
]


class NonContractiveError(RuntimeError):
    """Estimated spectral radius of the iteration matrix exceeds one."""


@dataclass(frozen=True)
class WeightConfig:
    """Per-control smoothing weights plus the step-size policy.

    omega entries lie in [0, 1]: 0 is pure fitting, 1 is pure smoothing.
    mu_policy is "per-row" (reciprocal absolute row sums of A), "uniform"
    (a single step just under 2 over the inf-norm of the equal-weight
    matrix), or an explicit positive vector.
    """

    omega: np.ndarray
    r: int = 2
    mu_policy: str | np.ndarray = "per-row"

    def __post_init__(self):
        om = np.array(self.omega, dtype=float)
        if om.ndim != 1:
            raise ValueError("omega must be a vector, one entry per control")
        if np.any(om < 0.0) or np.any(om > 1.0):
            raise ValueError("smoothing weights must lie in [0, 1]")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)
        if self.r not in (1, 2, 3):
            raise ValueError(f"derivative order {self.r} outside {{1, 2, 3}}")
        if isinstance(self.mu_policy, str):
            if self.mu_policy not in ("per-row", "uniform"):
                raise ValueError(f"unknown step policy {self.mu_policy!r}")
        else:
            mu = np.array(self.mu_policy, dtype=float)
            if mu.shape != om.shape or np.any(mu <= 0.0):
                raise ValueError("explicit steps must be positive, one per control")
            mu.setflags(write=False)
            object.__setattr__(self, "mu_policy", mu)


@dataclass(frozen=True)
class CollocationMatrix:
    """Basis values at the data parameters, dense plus row sparsity.

    Row i of dense holds N_j(t_i); starts[i] is the first active column
    and values[i] the degree+1 active entries of that row.
    """

    dense: np.ndarray
    starts: np.ndarray
    values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.dense.shape


@dataclass(frozen=True)
class GramMatrix:
    """matrix[j, l] = integral of the order-r derivatives N_j N_l."""

    matrix: np.ndarray
    r: int
    bandwidth: int


@dataclass(frozen=True)
class ContractionDiagnostics:
    inf_norm: float
    diagonally_dominant: bool
    spectral_radius: float
    reliable: bool


def _sparse_to_dense(starts, rows, n) -> np.ndarray:
    m = len(rows)
    dense = np.zeros((m, n))
    for i in range(m):
        vals = rows[i]
        dense[i, starts[i]:starts[i] + vals.size] = vals
    return dense


def collocation_matrix(kv: KnotVector, params: np.ndarray) -> CollocationMatrix:
    params = np.asarray(params, dtype=float)
    starts = np.empty(params.size, dtype=int)
    rows = np.empty((params.size, kv.degree + 1))
    for i, t in enumerate(params):
        start, vals = basis_all(kv, float(t))
        starts[i] = start
        rows[i] = vals
    dense = _sparse_to_dense(starts, rows, kv.n)
    _check_collocation_rows(dense)
    return CollocationMatrix(dense, starts, rows)


def surface_collocation_matrix(
    kv_s: KnotVector, kv_t: KnotVector, params: np.ndarray
) -> CollocationMatrix:
    """Rows are tensor products N_h(s_i) N_l(t_i), columns s-major."""
    params = np.asarray(params, dtype=float)
    if params.ndim != 2 or params.shape[1] != 2:
        raise ValueError("surface parameters must be (m, 2) pairs")
    n1, n2 = kv_s.n, kv_t.n
    m = params.shape[0]
    dense = np.zeros((m, n1 * n2))
    width = (kv_s.degree + 1) * (kv_t.degree + 1)
    starts = np.empty(m, dtype=int)
    values = np.zeros((m, width))
    for i, (s, t) in enumerate(params):
        s0, sv = basis_all(kv_s, float(s))
        t0, tv = basis_all(kv_t, float(t))
        block = np.outer(sv, tv)
        starts[i] = s0 * n2 + t0
        values[i] = block.ravel()
        for a in range(sv.size):
            col = (s0 + a) * n2 + t0
            dense[i, col:col + tv.size] = block[a]
    _check_collocation_rows(dense)
    return CollocationMatrix(dense, starts, values)


def _check_collocation_rows(dense: np.ndarray) -> None:
    sums = np.sum(dense, axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-12):
        raise AssertionError("collocation rows must sum to one")
    if np.any(dense < -1e-15):
        raise AssertionError("collocation entries must be nonnegative")


def group_index_sets(colloc: CollocationMatrix) -> list[np.ndarray]:
    """For each control j, the data indices i with N_j(t_i) != 0.

    Groups may be empty when no parameter falls in a basis support.
    """
    n = colloc.dense.shape[1]
    return [np.flatnonzero(colloc.dense[:, j]) for j in range(n)]


def _gauss_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    # order nodes integrate polynomials up to degree 2*order - 1 exactly
    return np.polynomial.legendre.leggauss(order)


def gram_matrix_curve(kv: KnotVector, r: int) -> GramMatrix:
    """Gram matrix of order-r basis derivatives, span-by-span quadrature.

    Per span the integrand is a polynomial of degree at most 2(p - r),
    so degree+1 Gauss nodes are exact. Spans are visited left to right to
    keep the accumulation order, and the result, deterministic.
    """
    p = kv.degree
    if not 0 <= r <= p:
        raise ValueError(f"derivative order {r} outside 0..{p}")
    n = kv.n
    d = np.zeros((n, n))
    nodes, weights = _gauss_nodes(p + 1)
    for span, a, b in kv.spans():
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        start = span - p
        for x, w in zip(nodes, weights):
            vals = _basis_ders(kv, span, mid + half * x, r)[r]
            d[start:span + 1, start:span + 1] += (half * w) * np.outer(vals, vals)
    return GramMatrix(d, r, p)


def gram_matrix_surface(kv_s: KnotVector, kv_t: KnotVector) -> GramMatrix:
    """Thin-plate form: sum of second-derivative energies across directions.

    D = D2_s x D0_t + 2 D1_s x D1_t + D0_s x D2_t  (x: Kronecker product),
    matching the s-major control ordering of SplineSurface.
    """
    if kv_s.degree < 2 or kv_t.degree < 2:
        raise ValueError("thin-plate energy needs degree >= 2 in both directions")
    d0s = gram_matrix_curve(kv_s, 0).matrix
    d1s = gram_matrix_curve(kv_s, 1).matrix
    d2s = gram_matrix_curve(kv_s, 2).matrix
    d0t = gram_matrix_curve(kv_t, 0).matrix
    d1t = gram_matrix_curve(kv_t, 1).matrix
    d2t = gram_matrix_curve(kv_t, 2).matrix
    d = np.kron(d2s, d0t) + 2.0 * np.kron(d1s, d1t) + np.kron(d0s, d2t)
    bandwidth = (kv_s.degree + 1) * kv_t.n
    return GramMatrix(d, 2, bandwidth)


def iteration_matrix(
    colloc: CollocationMatrix, gram: GramMatrix, omega: np.ndarray
) -> np.ndarray:
    """A = (I - W) N^T N + W D with W = diag(omega)."""
    omega = np.asarray(omega, dtype=float)
    ntn = colloc.dense.T @ colloc.dense
    return (1.0 - omega)[:, None] * ntn + omega[:, None] * gram.matrix


def normalization_weights(a: np.ndarray, config: WeightConfig) -> np.ndarray:
    """Step sizes mu for the iteration, one per control.

    "per-row" uses 1 over the absolute row sum of A, which makes the
    inf-norm of I - L A strictly less than one whenever A is strictly
    diagonally dominant with positive diagonal. "uniform" uses a single
    step 0.99 * 2 / ||B||_inf with B the equal-weight matrix, staying
    inside the 2 / lambda_max(B) bound that guarantees convergence for
    positive definite B.
    """
    row_sums = np.sum(np.abs(a), axis=1)
    if isinstance(config.mu_policy, np.ndarray):
        return np.array(config.mu_policy, dtype=float)
    if np.any(row_sums <= 0.0):
        raise ValueError("matrix has a zero row; no usable step size")
    if config.mu_policy == "per-row":
        return 1.0 / row_sums
    return np.full(a.shape[0], 0.99 * 2.0 / float(np.max(row_sums)))


def _power_radius_py(m: np.ndarray, v: np.ndarray, max_steps: int, rtol: float):
    estimate = 0.0
    for _ in range(max_steps):
        w = m @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0, True
        w /= norm
        if abs(norm - estimate) <= rtol * max(1.0, norm):
            return norm, True
        estimate = norm
        v = w
    return estimate, False


if njit is not None:

    @njit(cache=True)
    def _power_radius_jit(m, v, max_steps, rtol):  # pragma: no cover - numba
        estimate = 0.0
        for _ in range(max_steps):
            w = np.dot(m, v)
            norm = 0.0
            for i in range(w.size):
                norm += w[i] * w[i]
            norm = np.sqrt(norm)
            if norm == 0.0:
                return 0.0, True
            for i in range(w.size):
                w[i] /= norm
            if abs(norm - estimate) <= rtol * max(1.0, norm):
                return norm, True
            estimate = norm
            v = w
        return estimate, False

else:  # pragma: no cover
    _power_radius_jit = None


def contraction_diagnostics(
    a: np.ndarray, mu: np.ndarray, max_steps: int = 10_000
) -> ContractionDiagnostics:
    """Inf-norm and power-iteration spectral radius of I - diag(mu) A.

    The radius estimate stops once it stabilizes to nine digits; maps with
    clustered or complex dominant eigenvalues exhaust max_steps and come
    back flagged unreliable.
    """
    n = a.shape[0]
    m = -mu[:, None] * a
    m[np.arange(n), np.arange(n)] += 1.0
    inf_norm = float(np.max(np.sum(np.abs(m), axis=1)))
    diag = np.abs(np.diag(a))
    offsum = np.sum(np.abs(a), axis=1) - diag
    sdd = bool(np.all(diag > offsum) and np.all(np.diag(a) > 0.0))

    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    power = _power_radius_jit if _power_radius_jit is not None else _power_radius_py
    estimate, reliable = power(np.ascontiguousarray(m), v, max_steps, 1e-9)
    return ContractionDiagnostics(inf_norm, sdd, float(estimate), bool(reliable))


@dataclass
class AssemblyBundle:
    """Everything the iteration needs, assembled once per round.

    rhs = (I - W) N^T Q. update_matrix = I - L A and update_offset = L rhs
    are cached so one step is a single matrix product plus an add.
    """

    colloc: CollocationMatrix
    gram: GramMatrix
    a: np.ndarray
    mu: np.ndarray
    groups: list[np.ndarray]
    rhs: np.ndarray
    config: WeightConfig
    points: np.ndarray
    diagnostics: ContractionDiagnostics
    update_matrix: np.ndarray
    update_offset: np.ndarray
    knots: KnotVector | None = None
    knots_s: KnotVector | None = None
    knots_t: KnotVector | None = None
    params: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[0]


def _finish_bundle(colloc, gram, config, points, **geometry) -> AssemblyBundle:
    points = np.asarray(points, dtype=float)
    omega = config.omega
    if omega.size != colloc.dense.shape[1]:
        raise ValueError(
            f"{omega.size} weights for {colloc.dense.shape[1]} controls"
        )
    a = iteration_matrix(colloc, gram, omega)
    mu = normalization_weights(a, config)
    diag = contraction_diagnostics(a, mu)
    if not diag.diagonally_dominant:
        warnings.warn(
            "iteration matrix is not strictly diagonally dominant: "
            f"|I - L A|_inf = {diag.inf_norm:.6g}, "
            f"spectral radius ~ {diag.spectral_radius:.6g}",
            stacklevel=3,
        )
        # radius exactly 1 occurs for singular A and is still convergent,
        # so only a clearly expansive map is refused
        if diag.reliable and diag.spectral_radius > 1.0 + 1e-8:
            raise NonContractiveError(
                f"spectral radius estimate {diag.spectral_radius:.6g} > 1"
            )
    rhs = (1.0 - omega)[:, None] * (colloc.dense.T @ points)
    n = a.shape[0]
    update = -mu[:, None] * a
    update[np.arange(n), np.arange(n)] += 1.0
    offset = mu[:, None] * rhs
    groups = group_index_sets(colloc)
    return AssemblyBundle(
        colloc, gram, a, mu, groups, rhs, config, points, diag, update, offset,
        **geometry,
    )


def build_curve_bundle(
    kv: KnotVector, params: np.ndarray, points: np.ndarray, config: WeightConfig
) -> AssemblyBundle:
    colloc = collocation_matrix(kv, params)
    gram = gram_matrix_curve(kv, config.r)
    return _finish_bundle(
        colloc, gram, config, points, knots=kv, params=np.asarray(params, float)
    )


def build_surface_bundle(
    kv_s: KnotVector,
    kv_t: KnotVector,
    params: np.ndarray,
    points: np.ndarray,
    config: WeightConfig,
) -> AssemblyBundle:
    """Surface bundle; the smoothing order is fixed by the thin-plate form."""
    colloc = surface_collocation_matrix(kv_s, kv_t, params)
    gram = gram_matrix_surface(kv_s, kv_t)
    return _finish_bundle(
        colloc, gram, config, points,
        knots_s=kv_s, knots_t=kv_t, params=np.asarray(params, float),
    )
