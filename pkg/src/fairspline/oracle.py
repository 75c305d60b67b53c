"""Self-contained reference solvers used to cross-check the iteration.

Everything here is deliberately independent of the iterative path (and of
LAPACK): elimination, Jacobi rotations, Simpson sums and difference
stencils are all spelled out, so agreement between the two routes is
meaningful evidence rather than a tautology.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = [
    "SingularMatrixError",
    "direct_solve",
    "energy_min_solve",
    "symmetric_eigen",
    "pseudo_inverse_solution",
    "simpson_integral",
    "finite_difference",
]


class SingularMatrixError(ValueError):
    """Elimination met a pivot too small to trust."""


def direct_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a X = rhs by Gaussian elimination with partial pivoting.

    rhs may carry several columns. Raises SingularMatrixError when the
    best available pivot falls below 1e-14 times the inf-norm of a.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    x = np.array(rhs, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] != n:
        raise ValueError("rhs rows must match matrix order")
    scale = float(np.max(np.sum(np.abs(a), axis=1), initial=0.0))
    limit = 1e-14 * scale
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if np.abs(a[piv, col]) <= limit:
            raise SingularMatrixError(f"pivot {a[piv, col]:.3e} at column {col}")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= factors[:, None] * a[col, col:]
        x[col + 1:] -= factors[:, None] * x[col]
    for col in range(n - 1, -1, -1):
        x[col] = (x[col] - a[col, col + 1:] @ x[col + 1:]) / a[col, col]
    return x[:, 0] if squeeze else x


def energy_min_solve(b: np.ndarray, omega: float, ntq: np.ndarray) -> np.ndarray:
    """Exact minimizer of (1-w) * fit + w * energy for one shared weight.

    Solves B X = (1-w) N^T Q directly; a singular B propagates
    SingularMatrixError so callers can fall back to the pseudoinverse.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"weight {omega} outside [0, 1]")
    return direct_solve(b, (1.0 - omega) * np.asarray(ntq, dtype=float))


def symmetric_eigen(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of symmetric b.

    Cyclic Jacobi sweeps run until the off-diagonal Frobenius norm drops
    below 1e-12 times the Frobenius norm of b.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if b.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if float(np.max(np.abs(b - b.T), initial=0.0)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (b + b.T)
    v = np.eye(n)
    norm_b = float(np.sqrt(np.sum(a * a)))
    if norm_b == 0.0:
        return np.zeros(n), v
    tol = 1e-12 * norm_b
    for _ in range(100):
        off = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (np.abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    else:
        raise RuntimeError("Jacobi sweeps failed to converge")
    lam = np.diag(a).copy()
    order = np.argsort(-lam)
    return lam[order], v[:, order]


def pseudo_inverse_solution(
    b: np.ndarray, rhs: np.ndarray, omega: float
) -> tuple[np.ndarray, bool]:
    """Minimum-norm solution (1-w) B^+ rhs for symmetric PSD b.

    Eigenvalues below 1e-10 times the largest are treated as zero. The
    returned flag reports whether rhs is consistent, i.e. whether
    B B^+ rhs recovers rhs to within 1e-8 relative.
    """
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"weight {omega} outside [0, 1]")
    rhs = np.asarray(rhs, dtype=float)
    lam, vec = symmetric_eigen(b)
    lam_max = float(lam[0]) if lam.size else 0.0
    cutoff = 1e-10 * max(lam_max, 0.0)
    inv = np.where(lam > cutoff, 1.0 / np.where(lam > cutoff, lam, 1.0), 0.0)
    proj = vec.T @ rhs
    x = vec @ (inv[:, None] * proj if rhs.ndim == 2 else inv * proj)
    recovered = b @ x
    denom = float(np.sqrt(np.sum(rhs * rhs)))
    gap = float(np.sqrt(np.sum((recovered - rhs) ** 2)))
    consistent = gap <= 1e-8 * denom if denom > 0.0 else gap == 0.0
    return (1.0 - omega) * x, consistent


def simpson_integral(
    f: Callable[[float], float], a: float, b: float, subintervals: int
) -> float:
    """Composite Simpson rule with an even number of subintervals."""
    if subintervals < 2 or subintervals % 2 != 0:
        raise ValueError("subinterval count must be even and >= 2")
    h = (b - a) / subintervals
    total = f(a) + f(b)
    for i in range(1, subintervals):
        weight = 4.0 if i % 2 == 1 else 2.0
        total += weight * f(a + i * h)
    return total * h / 3.0


_CENTRAL_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def finite_difference(f: Callable[[float], float], t: float, r: int, h: float):
    """Central difference estimate of the order-r derivative at t.

    Supports r in {1, 2, 3}; the stencil must stay inside the domain of f,
    which is the caller's responsibility (here: no clamping is applied).
    """
    if r not in _CENTRAL_STENCILS:
        raise ValueError(f"unsupported derivative order {r}")
    if h <= 0.0:
        raise ValueError("step must be positive")
    acc = None
    for offset, weight in _CENTRAL_STENCILS[r]:
        val = np.asarray(f(t + offset * h), dtype=float) * weight
        acc = val if acc is None else acc + val
    return acc / h**r
