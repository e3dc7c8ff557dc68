import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from oracles import random_stable_system, rk4_output

from ctspline.errors import NonIncreasingTimes, NonPositiveTime, QuadratureNonConvergence
from ctspline.gramian import (
    adaptive_gk15,
    build_operator,
    controllability_gramian,
    cross_gram,
    gram_matrix,
    gram_matrix_quadrature,
    h_matrix,
)
from ctspline.lti_model import make_state_space, benchmark_system

SCALAR = make_state_space([[-1.0]], [1.0], [1.0])


def test_controllability_gramian_scalar_and_zero():
    assert abs(controllability_gramian(SCALAR, 1.0)[0, 0] - (1 - np.exp(-2)) / 2) < 1e-15
    assert np.array_equal(controllability_gramian(benchmark_system(), 0.0), np.zeros((3, 3)))
    with pytest.raises(NonPositiveTime):
        controllability_gramian(SCALAR, -0.1)


def test_controllability_gramian_vs_quadrature():
    sys = benchmark_system()

    def integrand(s):
        v = scipy.linalg.expm(s * sys.A) @ sys.b
        return np.outer(v, v)

    ref = scipy.integrate.quad_vec(integrand, 0.0, 0.5, epsabs=1e-13)[0]
    assert np.abs(controllability_gramian(sys, 0.5) - ref).max() < 1e-9


def test_gramian_monotone_in_time():
    sys = benchmark_system()
    prev = controllability_gramian(sys, 0.0)
    for t in np.linspace(0.1, 5.0, 25):
        W = controllability_gramian(sys, t)
        assert np.linalg.eigvalsh(W - prev).min() >= -1e-10
        prev = W


def test_gram_matrix_scalar():
    G = gram_matrix(SCALAR, [1.0])
    assert abs(G[0, 0] - (1 - np.exp(-2)) / 2) < 1e-15
    Gq = gram_matrix_quadrature(SCALAR, [1.0], tol=1e-10)
    assert abs(Gq[0, 0] - 0.4323323583816936) < 1e-10


def test_gram_matrix_scalar_two_times():
    # G_12 = int_0^1 e^{-(1-s)} e^{-(2-s)} ds = e^{-3} (e^2 - 1) / 2
    G = gram_matrix(SCALAR, [1.0, 2.0])
    assert abs(G[0, 1] - np.exp(-3) * (np.exp(2) - 1) / 2) < 1e-15
    assert abs(G[1, 1] - (1 - np.exp(-4)) / 2) < 1e-15


def test_gram_matrix_benchmark_small_vs_quadrature():
    sys = benchmark_system()
    t = [0.1, 0.2, 0.3]
    assert np.abs(gram_matrix(sys, t) - gram_matrix_quadrature(sys, t, tol=1e-12)).max() < 1e-8


def test_gram_matrix_random_systems_vs_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(5):
        sys = make_state_space(*random_stable_system(rng, 3))
        t = np.sort(rng.uniform(0.05, 4.0, 6))
        diff = np.abs(gram_matrix(sys, t) - gram_matrix_quadrature(sys, t, tol=1e-10)).max()
        assert diff <= max(10 * 1e-10, 1e-8)


def test_gram_symmetric_positive_definite():
    sys = benchmark_system()
    t = 0.1 + 0.25 * np.arange(20)
    G = gram_matrix(sys, t)
    assert np.array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() > 0


def test_scaling_identities(rng):
    sys = benchmark_system()
    t = np.sort(rng.uniform(0.1, 3.0, 8))
    G, H = gram_matrix(sys, t), h_matrix(sys, t)
    a = 1.7
    Gb = gram_matrix(make_state_space(sys.A, a * sys.b, sys.c), t)
    sys_c = make_state_space(sys.A, sys.b, a * sys.c)
    Gc, Hc = gram_matrix(sys_c, t), h_matrix(sys_c, t)
    scale = np.abs(G).max()
    assert np.abs(Gb - a**2 * G).max() <= 1e-12 * a**2 * scale
    assert np.abs(Gc - a**2 * G).max() <= 1e-12 * a**2 * scale
    assert np.abs(Hc - a * H).max() <= 1e-12 * a * np.abs(H).max()


def test_h_matrix_scalar_and_zero_row():
    H = h_matrix(SCALAR, [1.0, 2.0])
    np.testing.assert_allclose(H[:, 0], [np.exp(-1), np.exp(-2)], rtol=1e-14)
    sys = benchmark_system()
    np.testing.assert_allclose(cross_gram(sys, [0.0], [0.5]), [[0.0]])


def test_h_matrix_matches_unforced_ode(bench_op):
    sys = benchmark_system()
    x0 = np.array([0.7, -1.2, 0.4])
    t, y = rk4_output(sys.A, sys.b, sys.c, x0, lambda s: np.zeros_like(s), bench_op.T, h=1e-3)
    idx = np.rint(bench_op.times / 1e-3).astype(int)
    assert bench_op.H.shape == (501, 3)
    assert np.abs(bench_op.H @ x0 - y[idx]).max() < 1e-8


def test_time_validation():
    with pytest.raises(NonPositiveTime):
        gram_matrix(SCALAR, [0.0, 1.0])
    with pytest.raises(NonIncreasingTimes):
        gram_matrix(SCALAR, [1.0, 1.0])
    with pytest.raises(NonIncreasingTimes):
        h_matrix(SCALAR, [2.0, 1.0])


def test_cross_gram_matches_gram_on_samples(bench_op):
    K = cross_gram(benchmark_system(), bench_op.times[::7], bench_op.times)
    assert np.array_equal(K, bench_op.G[::7])


def test_build_operator_benchmark(bench_op):
    assert bench_op.N == 501
    assert bench_op.T == pytest.approx(5.1)
    assert not bench_op.G.flags.writeable


def test_adaptive_gk15():
    assert abs(adaptive_gk15(np.sin, 0.0, np.pi, 1e-12) - 2.0) < 1e-12
    assert adaptive_gk15(np.sin, 1.0, 1.0, 1e-12) == 0.0
    with pytest.raises(QuadratureNonConvergence):
        adaptive_gk15(lambda x: 1.0 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, 1e-14, max_panels=50)
