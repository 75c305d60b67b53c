import warnings

import numpy as np
import pytest

from fairspline.assembly import WeightConfig, build_curve_bundle
from fairspline.iteration import (
    StoppingRule,
    absolute_energy,
    absolute_fitting_error,
    difference_vectors,
    fairing_vectors,
    fitting_vectors,
    initial_state,
    relative_metric,
    run,
    step,
    zero_state,
)
from fairspline.oracle import direct_solve, simpson_integral
from fairspline.splines import KnotVector, SplineCurve

# sparsely sampled instances warn about lost diagonal dominance; the runs
# here stay contractive regardless, so keep the output quiet
pytestmark = pytest.mark.filterwarnings("ignore::UserWarning")


def bezier_knots(p=3):
    return KnotVector(p, np.concatenate([np.zeros(p + 1), np.ones(p + 1)]))


def random_clamped(rng, n, p=3):
    interior = np.sort(rng.uniform(0.05, 0.95, n - p - 1))
    return KnotVector(p, np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)]))


def dense_bundle(seed, m, n, omega_high=0.5, dim=2):
    """Well-sampled instance (m >> n keeps the iteration matrix dominant)."""
    rng = np.random.default_rng(seed)
    kv = random_clamped(rng, n)
    params = np.sort(rng.uniform(0, 1, m))
    params[0], params[-1] = 0.0, 1.0
    points = rng.standard_normal((m, dim))
    omega = rng.uniform(0.0, omega_high, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = build_curve_bundle(kv, params, points, WeightConfig(omega))
    return bundle, rng


# ---------------------------------------------------------------- stepping


def test_step_matches_per_point_update():
    bundle, rng = dense_bundle(1, 30, 10)
    control = rng.standard_normal((10, 2))
    state = initial_state(bundle, control)

    diff = difference_vectors(bundle, control)
    delta = fitting_vectors(bundle, diff)
    eta = fairing_vectors(bundle, control)
    omega = bundle.config.omega
    manual = control.copy()
    for j in range(10):
        manual[j] += bundle.mu[j] * (
            (1 - omega[j]) * delta[j] - omega[j] * eta[j]
        )

    advanced = step(state)
    assert advanced.k == 1
    np.testing.assert_allclose(advanced.control, manual, atol=1e-12)


def test_step_composes_and_leaves_input_frozen():
    bundle, rng = dense_bundle(2, 25, 8)
    state = zero_state(bundle)
    s1 = step(step(state))
    assert s1.k == 2
    assert state.k == 0
    assert not state.control.flags.writeable
    with pytest.raises(ValueError):
        state.control[0, 0] = 1.0


def test_exact_solution_is_fixed_point():
    bundle, _ = dense_bundle(3, 40, 9)
    solution = direct_solve(bundle.a, bundle.rhs)
    state = initial_state(bundle, solution)
    moved = step(state).control - solution
    scale = np.max(np.abs(solution))
    assert np.max(np.abs(moved)) < 1e-12 * scale


def test_difference_vectors_dense_oracle():
    from fairspline.datasets import sample_starfish
    from fairspline.splines import make_knot_vector, select_initial_controls

    data = sample_starfish(100)
    idx, control = select_initial_controls(data, 34)
    kv = make_knot_vector(data.params, idx)
    bundle = build_curve_bundle(
        kv, data.params, data.points, WeightConfig(np.full(34, 1e-5))
    )
    diff = difference_vectors(bundle, control)
    curve = SplineCurve(kv, control)
    for i in range(0, 100, 7):
        expected = data.points[i] - curve.eval(data.params[i])
        np.testing.assert_allclose(diff[i], expected, atol=1e-13)
    # interpolated rows vanish: the initial controls are data points
    np.testing.assert_allclose(diff[0], 0, atol=1e-13)
    np.testing.assert_allclose(diff[-1], 0, atol=1e-13)


# ----------------------------------------------------------------- metrics


def test_absolute_fitting_error_known_offset():
    rng = np.random.default_rng(11)
    kv = bezier_knots()
    params = np.linspace(0, 1, 5)
    control = rng.standard_normal((4, 2))
    from fairspline.assembly import collocation_matrix

    on_curve = collocation_matrix(kv, params).dense @ control
    points = on_curve + np.array([3.0, 4.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = build_curve_bundle(kv, params, points, WeightConfig(np.zeros(4)))
    assert abs(absolute_fitting_error(bundle, control) - 5.0) < 1e-12


def test_absolute_energy_zero_for_straight_line():
    rng = np.random.default_rng(12)
    kv = random_clamped(rng, 9)
    g = np.array([np.mean(kv.knots[j + 1:j + 4]) for j in range(9)])
    control = np.column_stack([g, 2.0 * g - 1.0])
    params = np.linspace(0, 1, 30)
    points = np.column_stack([params, 2.0 * params - 1.0])
    bundle = build_curve_bundle(kv, params, points, WeightConfig(np.full(9, 0.3)))
    assert absolute_energy(bundle, control) < 1e-9


def test_absolute_energy_matches_quadrature():
    rng = np.random.default_rng(13)
    kv = random_clamped(rng, 8)
    control = rng.standard_normal((8, 2))
    params = np.linspace(0, 1, 25)
    bundle = build_curve_bundle(
        kv, params, rng.standard_normal((25, 2)), WeightConfig(np.full(8, 0.5))
    )
    curve = SplineCurve(kv, control)

    def squared_second(t):
        d2 = curve.eval(t, 2)
        return float(d2 @ d2)

    total = sum(
        simpson_integral(squared_second, a, b, 200) for _, a, b in kv.spans()
    )
    energy = absolute_energy(bundle, control)
    assert abs(energy - total) < 1e-6 * abs(total)


def test_relative_metric_conventions():
    assert relative_metric(2.0, 4.0) == 0.5
    assert relative_metric(0.0, 0.0) == 0.0
    with pytest.raises(ZeroDivisionError):
        relative_metric(1.0, 0.0)


# ------------------------------------------------------------------- runs


def test_run_trace_shape_and_baselines():
    bundle, rng = dense_bundle(21, 50, 10)
    state = initial_state(bundle, rng.standard_normal((10, 2)))
    final, trace = run(state, StoppingRule(tol=1e-8))
    assert trace.stop_reason == "converged"
    assert len(trace) == final.k - state.k + 1
    assert trace.table.shape[1] == 5
    row0 = trace.table[0]
    assert row0[2] == 1.0 and row0[3] == 1.0 and row0[4] == 1.0
    assert np.all(np.isfinite(trace.table))
    records = trace.records
    assert records[0].k == 0 and records[-1].k == final.k


def test_run_square_system_interpolates():
    kv = bezier_knots()
    params = np.array([0.0, 1 / 3, 2 / 3, 1.0])
    rng = np.random.default_rng(22)
    points = rng.standard_normal((4, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = build_curve_bundle(kv, params, points, WeightConfig(np.zeros(4)))
    final, trace = run(zero_state(bundle), StoppingRule(1e-13, 50_000, "residual"))
    assert trace.stop_reason == "converged"
    curve = SplineCurve(kv, final.control)
    for t, q in zip(params, points):
        np.testing.assert_allclose(curve.eval(t), q, atol=1e-9)


def test_run_residual_mode_certifies_solution():
    bundle, _ = dense_bundle(23, 60, 12)
    tol = 1e-10
    final, trace = run(zero_state(bundle), StoppingRule(tol, 200_000, "residual"))
    assert trace.stop_reason == "converged"
    # recomputing the residual takes a different arithmetic route than the
    # kernel, so allow a rounding factor on top of the certified bound
    residual = bundle.rhs - bundle.a @ final.control
    assert np.linalg.norm(residual) <= 2 * tol * np.linalg.norm(bundle.rhs)
    direct = direct_solve(bundle.a, bundle.rhs)
    gap = np.max(np.abs(final.control - direct)) / np.max(np.abs(direct))
    assert gap < 1e-8


def test_run_delta_mode_levels_off():
    bundle, rng = dense_bundle(24, 60, 12)
    start = initial_state(bundle, rng.standard_normal((12, 2)))
    final, trace = run(start, StoppingRule(tol=1e-6, mode="delta"))
    assert trace.stop_reason == "converged"
    tail = trace.table[-1, 4]
    assert tail < 1e-3
    # residual mode keeps going past the delta stop for a tighter answer
    final_r, trace_r = run(start, StoppingRule(1e-10, 200_000, "residual"))
    assert len(trace_r) > len(trace)
    direct = direct_solve(bundle.a, bundle.rhs)
    err_delta = np.max(np.abs(final.control - direct))
    err_resid = np.max(np.abs(final_r.control - direct))
    assert err_resid < err_delta


def test_run_geometric_decay_under_dominance():
    # dense sampling with light smoothing keeps A strictly dominant, so the
    # inf-norm of I - L A bounds the error decay rate from above
    from fairspline.datasets import sample_starfish
    from fairspline.splines import make_knot_vector, select_initial_controls

    data = sample_starfish(100)
    idx, control0 = select_initial_controls(data, 34)
    kv = make_knot_vector(data.params, idx)
    omega = np.full(34, 1e-5)
    omega[5:15] = 3e-5
    bundle = build_curve_bundle(kv, data.params, data.points, WeightConfig(omega))
    assert bundle.diagnostics.diagonally_dominant
    norm = bundle.diagnostics.inf_norm
    assert norm < 1.0
    direct = direct_solve(bundle.a, bundle.rhs)

    def error_after(k):
        final, _ = run(initial_state(bundle, control0), StoppingRule(0.0, k))
        return np.max(np.abs(final.control - direct))

    e0 = np.max(np.abs(control0 - direct))
    for k in (5, 10, 20):
        assert error_after(k) <= norm**k * e0 * (1 + 1e-9)


def test_run_budget_exhaustion_with_zero_tol():
    bundle, _ = dense_bundle(26, 40, 9)
    final, trace = run(zero_state(bundle), StoppingRule(0.0, 37))
    assert trace.stop_reason == "max_iters"
    assert final.k == 37
    assert len(trace) == 38


def test_run_divergence_flagged():
    bundle, rng = dense_bundle(27, 40, 9)
    # force an expansive map: blow the step sizes far past the safe bound
    bundle.mu = bundle.mu * 400.0
    n = bundle.n
    bundle.update_matrix = np.eye(n) - bundle.mu[:, None] * bundle.a
    bundle.update_offset = bundle.mu[:, None] * bundle.rhs
    state = initial_state(bundle, rng.standard_normal((9, 2)))
    final, trace = run(state, StoppingRule(1e-6, 100_000))
    assert trace.stop_reason == "diverged"
    assert trace.table[-1, 4] > 1e6 or not np.all(np.isfinite(trace.table[-1]))


def test_step_rejects_non_finite():
    bundle, rng = dense_bundle(28, 40, 9)
    state = initial_state(bundle, rng.standard_normal((9, 2)))
    with np.errstate(invalid="ignore"):
        bundle.update_matrix = bundle.update_matrix * np.inf
        with pytest.raises(FloatingPointError):
            step(state)


def test_run_from_exact_zero_fixed_point():
    rng = np.random.default_rng(29)
    kv = random_clamped(rng, 8)
    params = np.sort(rng.uniform(0, 1, 30))
    params[0], params[-1] = 0.0, 1.0
    bundle = build_curve_bundle(
        kv, params, np.zeros((30, 2)), WeightConfig(np.full(8, 0.4))
    )
    final, trace = run(zero_state(bundle), StoppingRule(1e-6))
    assert trace.stop_reason == "converged"
    np.testing.assert_array_equal(final.control, 0.0)
    np.testing.assert_array_equal(trace.table[:, 4], 0.0)
    # zero baselines with zero values read as 0, not nan
    np.testing.assert_array_equal(trace.table[:, 2], 0.0)


def test_stopping_rule_validation():
    with pytest.raises(ValueError):
        StoppingRule(tol=-1e-9)
    with pytest.raises(ValueError):
        StoppingRule(max_iters=0)
    with pytest.raises(ValueError):
        StoppingRule(mode="energy")
    StoppingRule(tol=0.0)  # explicit budget mode is fine


def test_smoothing_lowers_energy_from_least_squares_start():
    rng = np.random.default_rng(31)
    kv = KnotVector(
        3, np.concatenate([np.zeros(4), np.linspace(0, 1, 10)[1:-1], np.ones(4)])
    )
    params = np.linspace(0, 1, 80)
    points = rng.standard_normal((80, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        smooth = build_curve_bundle(
            kv, params, points, WeightConfig(np.full(12, 0.2))
        )
    ntn = smooth.colloc.dense.T @ smooth.colloc.dense
    control0 = direct_solve(ntn, smooth.colloc.dense.T @ points)
    final, trace = run(
        initial_state(smooth, control0), StoppingRule(1e-10, 200_000, "residual")
    )
    assert trace.stop_reason == "converged"
    assert absolute_energy(smooth, final.control) < absolute_energy(
        smooth, control0
    )
    energies = trace.table[:, 1]
    assert np.all(np.diff(energies) <= 1e-9 * energies[0])
    # the price of smoothness is fitting error: it can only grow from here
    assert absolute_fitting_error(smooth, final.control) >= absolute_fitting_error(
        smooth, control0
    )
