import numpy as np
import pytest

from fairspline.oracle import simpson_integral
from fairspline.splines import KnotVector, _basis_ders


@pytest.fixture(scope="session")
def simpson_gram():
    """Composite-Simpson Gram assembly, integrating span by span.

    Evaluates the fixed polynomial piece of each span directly, so the
    one-sided limit convention at interior knots never leaks into the
    integrand. Independent of the Gauss-Legendre production path.
    """

    def build(kv: KnotVector, r: int, subintervals: int = 400) -> np.ndarray:
        p = kv.degree
        d = np.zeros((kv.n, kv.n))
        for span, a, b in kv.spans():
            start = span - p
            for j in range(p + 1):
                for l in range(j, p + 1):

                    def f(t, j=j, l=l):
                        row = _basis_ders(kv, span, t, r)[r]
                        return row[j] * row[l]

                    value = simpson_integral(f, a, b, subintervals)
                    d[start + j, start + l] += value
                    if l != j:
                        d[start + l, start + j] += value
        return d

    return build
