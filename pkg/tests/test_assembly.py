import warnings

import numpy as np
import pytest

from fairspline.assembly import (
    WeightConfig,
    build_curve_bundle,
    collocation_matrix,
    contraction_diagnostics,
    gram_matrix_curve,
    gram_matrix_surface,
    group_index_sets,
    iteration_matrix,
    normalization_weights,
    surface_collocation_matrix,
)
from fairspline.splines import KnotVector


def bezier_knots(p=3):
    return KnotVector(p, np.concatenate([np.zeros(p + 1), np.ones(p + 1)]))


def random_clamped(rng, n, p=3):
    interior = np.sort(rng.uniform(0.05, 0.95, n - p - 1))
    return KnotVector(p, np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)]))


def greville(kv):
    return np.array([
        np.mean(kv.knots[j + 1:j + 1 + kv.degree]) for j in range(kv.n)
    ])


# ------------------------------------------------------------- collocation


def test_collocation_bezier_rows():
    colloc = collocation_matrix(bezier_knots(), np.array([0.0, 0.5, 1.0]))
    expected = np.array([
        [1, 0, 0, 0],
        [0.125, 0.375, 0.375, 0.125],
        [0, 0, 0, 1.0],
    ])
    np.testing.assert_allclose(colloc.dense, expected, atol=1e-15)


def test_collocation_all_zero_params():
    colloc = collocation_matrix(bezier_knots(), np.zeros(4))
    np.testing.assert_allclose(colloc.dense, np.tile([1.0, 0, 0, 0], (4, 1)))


def test_collocation_starfish_structure():
    from fairspline.datasets import sample_starfish
    from fairspline.splines import make_knot_vector, select_initial_controls

    data = sample_starfish(100)
    idx, _ = select_initial_controls(data, 34)
    kv = make_knot_vector(data.params, idx)
    colloc = collocation_matrix(kv, data.params)
    dense = colloc.dense
    assert dense.shape == (100, 34)
    np.testing.assert_allclose(dense.sum(axis=1), np.ones(100), atol=1e-12)
    assert np.all((dense > 0).sum(axis=1) <= 4)
    assert np.all(dense >= -1e-15)


def test_group_index_sets_bezier():
    colloc = collocation_matrix(bezier_knots(), np.array([0.0, 0.5, 1.0]))
    groups = group_index_sets(colloc)
    np.testing.assert_array_equal(groups[0], [0, 1])
    np.testing.assert_array_equal(groups[1], [1])
    np.testing.assert_array_equal(groups[2], [1])
    np.testing.assert_array_equal(groups[3], [1, 2])


def test_group_index_sets_match_sparsity_and_cover():
    rng = np.random.default_rng(6)
    kv = random_clamped(rng, 12)
    params = np.sort(rng.uniform(0, 1, 40))
    colloc = collocation_matrix(kv, params)
    groups = group_index_sets(colloc)
    for j, group in enumerate(groups):
        np.testing.assert_array_equal(group, np.flatnonzero(colloc.dense[:, j]))
    assert set(np.concatenate(groups)) == set(range(40))


def test_clustered_params_leave_empty_groups():
    rng = np.random.default_rng(9)
    kv = random_clamped(rng, 10)
    params = np.sort(rng.uniform(0.0, 0.1, 25))
    groups = group_index_sets(collocation_matrix(kv, params))
    assert any(g.size == 0 for g in groups)


# ------------------------------------------------------------------- gram


def test_gram_bezier_r1_corner_entry():
    # d/dt (1-t)^3 squared integrates to 9/5 on [0, 1]
    d = gram_matrix_curve(bezier_knots(), 1).matrix
    assert abs(d[0, 0] - 9.0 / 5.0) < 1e-14


def test_gram_constant_null_space():
    rng = np.random.default_rng(13)
    kv = random_clamped(rng, 11)
    d2 = gram_matrix_curve(kv, 2).matrix
    residual = d2 @ np.ones(11)
    assert np.max(np.abs(residual)) < 1e-10


def test_gram_linear_null_space_r2_and_quadratic_r3():
    rng = np.random.default_rng(14)
    kv = random_clamped(rng, 9)
    g = greville(kv)
    d2 = gram_matrix_curve(kv, 2).matrix
    assert np.max(np.abs(d2 @ (0.3 + 1.7 * g))) < 1e-9
    d1 = gram_matrix_curve(kv, 1).matrix
    assert np.max(np.abs(d1 @ np.full(9, 4.2))) < 1e-10


def test_gram_matches_simpson_oracle(simpson_gram):
    from fairspline.datasets import sample_starfish
    from fairspline.splines import make_knot_vector, select_initial_controls

    data = sample_starfish(100)
    idx, _ = select_initial_controls(data, 34)
    kv = make_knot_vector(data.params, idx)
    d = gram_matrix_curve(kv, 2).matrix
    oracle = simpson_gram(kv, 2)
    gap = np.linalg.norm(d - oracle) / np.linalg.norm(oracle)
    assert gap < 1e-8


def test_gram_symmetric_psd_banded():
    rng = np.random.default_rng(17)
    kv = random_clamped(rng, 10)
    probes = rng.standard_normal((200, 10))
    for r in (0, 1, 2, 3):
        d = gram_matrix_curve(kv, r).matrix
        assert np.max(np.abs(d - d.T)) < 1e-10 * np.max(np.abs(d))
        # integral of a square: every quadratic form is nonnegative
        forms = np.einsum("ij,jk,ik->i", probes, d, probes)
        assert np.all(forms >= -1e-9 * np.max(np.abs(d)))
        for j in range(10):
            for l in range(10):
                if abs(j - l) > kv.degree:
                    assert d[j, l] == 0.0


def test_surface_gram_form_and_plane_null_space():
    kv = bezier_knots()
    d0 = gram_matrix_curve(kv, 0).matrix
    d1 = gram_matrix_curve(kv, 1).matrix
    d2 = gram_matrix_curve(kv, 2).matrix
    surf = gram_matrix_surface(kv, kv).matrix
    expected = np.kron(d2, d0) + 2.0 * np.kron(d1, d1) + np.kron(d0, d2)
    np.testing.assert_allclose(surf, expected, atol=0)
    np.testing.assert_array_equal(surf, surf.T)
    # bilinear net (plane) coefficients are annihilated
    g = greville(kv)
    coeffs = (0.7 * g[:, None] + 0.2 * g[None, :] + 1.0).reshape(-1)
    assert np.max(np.abs(surf @ coeffs)) < 1e-9


def test_surface_gram_matches_2d_quadrature_oracle(simpson_gram):
    rng = np.random.default_rng(27)
    kv_s = random_clamped(rng, 6)
    kv_t = random_clamped(rng, 6)
    surf = gram_matrix_surface(kv_s, kv_t).matrix
    parts = {}
    for r in (0, 1, 2):
        parts[("s", r)] = simpson_gram(kv_s, r)
        parts[("t", r)] = simpson_gram(kv_t, r)
    oracle = (
        np.kron(parts[("s", 2)], parts[("t", 0)])
        + 2.0 * np.kron(parts[("s", 1)], parts[("t", 1)])
        + np.kron(parts[("s", 0)], parts[("t", 2)])
    )
    gap = np.linalg.norm(surf - oracle) / np.linalg.norm(oracle)
    assert gap < 1e-8


def test_surface_gram_needs_degree_two():
    lin = KnotVector(1, np.array([0.0, 0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        gram_matrix_surface(lin, bezier_knots())


# -------------------------------------------------------- iteration matrix


def test_iteration_matrix_omega_extremes():
    rng = np.random.default_rng(33)
    kv = random_clamped(rng, 8)
    params = np.sort(rng.uniform(0, 1, 20))
    colloc = collocation_matrix(kv, params)
    gram = gram_matrix_curve(kv, 2)
    ntn = colloc.dense.T @ colloc.dense
    a0 = iteration_matrix(colloc, gram, np.zeros(8))
    np.testing.assert_allclose(a0, ntn, atol=1e-13)
    a1 = iteration_matrix(colloc, gram, np.ones(8))
    np.testing.assert_allclose(a1, gram.matrix, atol=1e-13)


def test_iteration_matrix_mixed_matches_naive():
    rng = np.random.default_rng(34)
    kv = random_clamped(rng, 8)
    params = np.sort(rng.uniform(0, 1, 20))
    colloc = collocation_matrix(kv, params)
    gram = gram_matrix_curve(kv, 2)
    omega = rng.uniform(0, 1, 8)
    a = iteration_matrix(colloc, gram, omega)
    naive = np.zeros((8, 8))
    ntn = colloc.dense.T @ colloc.dense
    for j in range(8):
        for l in range(8):
            naive[j, l] = (1 - omega[j]) * ntn[j, l] + omega[j] * gram.matrix[j, l]
    np.testing.assert_allclose(a, naive, atol=1e-13)


# ------------------------------------------------- normalization + diagnostics


def test_normalization_per_row_example():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    mu = normalization_weights(a, WeightConfig(np.zeros(2), mu_policy="per-row"))
    np.testing.assert_allclose(mu, [1 / 3, 1 / 4])
    m = np.eye(2) - mu[:, None] * a
    assert abs(np.max(np.sum(np.abs(m), axis=1)) - 2 / 3) < 1e-15


def test_normalization_identity_and_zero_row():
    mu = normalization_weights(np.eye(3), WeightConfig(np.zeros(3)))
    np.testing.assert_allclose(mu, np.ones(3))
    with pytest.raises(ValueError):
        normalization_weights(
            np.array([[1.0, 0.0], [0.0, 0.0]]), WeightConfig(np.zeros(2))
        )


def test_normalization_uniform_under_two_over_norm():
    rng = np.random.default_rng(40)
    a = np.abs(rng.standard_normal((5, 5))) + 5 * np.eye(5)
    mu = normalization_weights(a, WeightConfig(np.zeros(5), mu_policy="uniform"))
    assert np.ptp(mu) == 0.0
    assert 0 < mu[0] < 2.0 / np.max(np.sum(np.abs(a), axis=1))


def test_normalization_explicit_vector_passthrough():
    explicit = np.array([0.5, 0.25])
    mu = normalization_weights(
        np.eye(2), WeightConfig(np.zeros(2), mu_policy=explicit)
    )
    np.testing.assert_allclose(mu, explicit)


def test_diagnostics_examples():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    mu = normalization_weights(a, WeightConfig(np.zeros(2)))
    diag = contraction_diagnostics(a, mu)
    assert abs(diag.inf_norm - 2 / 3) < 1e-15
    assert diag.diagonally_dominant
    ident = contraction_diagnostics(np.eye(4), np.ones(4))
    assert ident.inf_norm == 0.0


def test_diagnostics_random_sdd_contracts():
    rng = np.random.default_rng(55)
    for _ in range(100):
        a = rng.uniform(-1, 1, (20, 20))
        np.fill_diagonal(a, np.sum(np.abs(a), axis=1) + rng.uniform(0.1, 2))
        config = WeightConfig(np.zeros(20))
        mu = normalization_weights(a, config)
        diag = contraction_diagnostics(a, mu)
        assert diag.diagonally_dominant
        assert 0.0 < diag.inf_norm < 1.0


def test_weight_config_validation():
    with pytest.raises(ValueError):
        WeightConfig(np.array([0.5, 1.2]))
    with pytest.raises(ValueError):
        WeightConfig(np.array([0.5, 0.5]), r=4)
    with pytest.raises(ValueError):
        WeightConfig(np.array([0.5, 0.5]), mu_policy="fastest")


def test_bundle_consistency():
    rng = np.random.default_rng(60)
    kv = random_clamped(rng, 8)
    params = np.sort(rng.uniform(0, 1, 30))
    params[0], params[-1] = 0.0, 1.0
    points = rng.standard_normal((30, 2))
    config = WeightConfig(np.full(8, 1e-3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = build_curve_bundle(kv, params, points, config)
    # A recomputes entrywise from its definition
    recomputed = iteration_matrix(bundle.colloc, bundle.gram, config.omega)
    np.testing.assert_allclose(bundle.a, recomputed, atol=1e-12)
    assert np.all(bundle.mu > 0)
    rhs = (1 - config.omega)[:, None] * (bundle.colloc.dense.T @ points)
    np.testing.assert_allclose(bundle.rhs, rhs, atol=1e-13)
    np.testing.assert_allclose(
        bundle.update_matrix,
        np.eye(8) - bundle.mu[:, None] * bundle.a,
        atol=1e-14,
    )


def test_bundle_warns_when_not_dominant():
    # sparse data relative to the controls breaks strict dominance while
    # the map stays contractive; the builder must warn, not refuse
    rng = np.random.default_rng(70)
    kv = random_clamped(rng, 8)
    params = np.sort(rng.uniform(0, 1, 20))
    params[0], params[-1] = 0.0, 1.0
    points = rng.standard_normal((20, 2))
    omega = rng.uniform(0.0, 0.5, 8)
    with pytest.warns(UserWarning, match="diagonally dominant"):
        bundle = build_curve_bundle(kv, params, points, WeightConfig(omega))
    assert not bundle.diagnostics.diagonally_dominant
    assert bundle.diagnostics.spectral_radius < 1.0


def test_surface_collocation_rows_sum_to_one():
    rng = np.random.default_rng(61)
    kv = bezier_knots()
    params = rng.uniform(0, 1, (25, 2))
    colloc = surface_collocation_matrix(kv, kv, params)
    np.testing.assert_allclose(colloc.dense.sum(axis=1), np.ones(25), atol=1e-12)
