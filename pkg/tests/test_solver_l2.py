import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctspline.data_io import synth_paper_dataset
from ctspline.errors import DimensionMismatch, NonPositiveWeight
from ctspline.gramian import gram_matrix
from ctspline.lti_model import benchmark_system
from ctspline.solver_l2 import L2Config, accurate_residual, l2_objective, normal_residual, solve_l2


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 10.0), st.floats(0.1, 5.0), st.floats(-10.0, 10.0), st.floats(1e-4, 10.0))
def test_scalar_formula(gamma, w, y, lam):
    theta = solve_l2([[gamma]], [w], [y], lam)
    assert abs(theta[0] - w * y / (lam + w * gamma)) <= 1e-12 * max(1.0, abs(theta[0]))


def test_zero_data_gives_zero(bench_op):
    assert np.array_equal(solve_l2(bench_op.G, None, np.zeros(501), 1e-4), np.zeros(501))


def test_benchmark_preset_dense_and_accurate(bench_op):
    ds, _ = synth_paper_dataset(0)
    theta = solve_l2(bench_op.G, ds.weights, ds.values, 1e-4)
    assert np.mean(np.abs(theta) > 1e-3) > 0.5
    assert normal_residual(theta, bench_op.G, ds.weights, ds.values, 1e-4) <= 1e-10 * np.abs(ds.values).max()


def test_nonuniform_weights_residual(bench_op, rng):
    ds, _ = synth_paper_dataset(3)
    w = rng.uniform(0.2, 3.0, 501)
    theta = solve_l2(bench_op.G, w, ds.values, 1e-3)
    assert normal_residual(theta, bench_op.G, w, ds.values, 1e-3) <= 1e-10 * np.abs(w * ds.values).max()


def test_convexity_spot_check(rng):
    t = np.sort(rng.uniform(0.1, 3.0, 30))
    G = gram_matrix(benchmark_system(), t)
    y = np.sin(t) + 0.1 * rng.normal(size=30)
    w = rng.uniform(0.5, 2.0, 30)
    lam = 1e-2
    theta = solve_l2(G, w, y, lam)
    f0 = l2_objective(theta, G, w, y, lam)
    for _ in range(100):
        d = rng.normal(size=30)
        d *= 1e-3 / np.linalg.norm(d)
        assert l2_objective(theta + d, G, w, y, lam) >= f0 - 1e-12 * f0


def test_shrinkage_for_large_lambda(bench_op):
    ds, _ = synth_paper_dataset(1)
    lam = 1e6 * np.linalg.norm(bench_op.G, 2)
    theta = solve_l2(bench_op.G, None, ds.values, lam)
    assert np.linalg.norm(theta) <= np.linalg.norm(ds.values) / lam * (1 + 1e-6)


def test_validation():
    with pytest.raises(ValueError):
        solve_l2([[1.0]], None, [1.0], 0.0)
    with pytest.raises(NonPositiveWeight):
        solve_l2([[1.0]], [0.0], [1.0], 1.0)
    with pytest.raises(DimensionMismatch):
        solve_l2(np.eye(2), None, [1.0], 1.0)
    with pytest.raises(ValueError):
        L2Config(lam=-1.0)


def test_accurate_residual_beats_plain_products():
    # x = (1e16, 1, -1e16): plain summation loses the middle term entirely
    K = np.array([[1.0, 1.0, 1.0]])
    x = np.array([1e16, 1.0, -1e16])
    assert accurate_residual(K, x, np.array([0.0]))[0] == -1.0
