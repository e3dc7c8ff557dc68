"""Grammian of the shifted impulse responses and the initial-state matrix.

For sample times ``t_1 < ... < t_N = T`` the Grammian is

    G_ij = int_0^T g(t_i - t) g(t_j - t) dt,

which, because ``g`` vanishes for negative lags, collapses to

    G_ij = c^T W(t_min) exp(A^T (t_max - t_min)) c

with ``W`` the finite-horizon controllability Gramian. ``W`` itself comes
from one exponential of a ``2n x 2n`` block matrix (Van Loan), so no
numerical integration is needed. :func:`gram_matrix_quadrature` keeps an
adaptive quadrature around as an independent check.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonIncreasingTimes, NonPositiveTime, OutOfHorizon, QuadratureNonConvergence
from .lti_model import StateSpace, matrix_exponential

__all__ = [
    "GramOperator",
    "build_operator",
    "controllability_gramian",
    "gram_matrix",
    "cross_gram",
    "gram_matrix_quadrature",
    "adaptive_gk15",
    "h_matrix",
    "validate_times",
]

# Gap values are merged on this grid before exponentiating, so uniformly
# sampled data needs only O(N) exponentials.
_GAP_DECIMALS = 12
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class GramOperator:
    G: np.ndarray
    H: np.ndarray
    times: np.ndarray

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def N(self) -> int:
        return self.times.size


def validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise NonIncreasingTimes("time vector is empty")
    if not np.all(np.isfinite(t)):
        raise NonPositiveTime("time vector contains NaN or Inf")
    if t[0] <= 0.0:
        raise NonPositiveTime(f"sample times must be > 0, got t[0] = {t[0]!r}")
    bad = np.nonzero(np.diff(t) <= 0.0)[0]
    if bad.size:
        k = int(bad[0])
        raise NonIncreasingTimes(f"times not strictly increasing at index {k + 1}: {t[k]!r} >= {t[k + 1]!r}")
    return t


def _gramians(sys: StateSpace, t: np.ndarray) -> np.ndarray:
    """Stack of ``W(t_k)`` for a 1-D array of nonnegative times."""
    n = sys.n
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -sys.A
    block[:n, n:] = np.outer(sys.b, sys.b)
    block[n:, n:] = sys.A.T
    out = np.empty((t.size, n, n))
    for lo in range(0, t.size, _CHUNK):
        tt = t[lo:lo + _CHUNK]
        F = matrix_exponential(tt[:, None, None] * block)
        W = np.swapaxes(F[:, n:, n:], 1, 2) @ F[:, :n, n:]
        out[lo:lo + _CHUNK] = 0.5 * (W + np.swapaxes(W, 1, 2))
    return out


def controllability_gramian(sys: StateSpace, t: float) -> np.ndarray:
    """``W(t) = int_0^t exp(A s) b b^T exp(A^T s) ds`` via Van Loan's block exponential."""
    t = float(t)
    if not t >= 0.0:
        raise NonPositiveTime(f"gramian horizon must be >= 0, got {t!r}")
    return _gramians(sys, np.array([t]))[0]


def _output_rows(sys: StateSpace, t: np.ndarray) -> np.ndarray:
    """Rows ``c^T exp(A t_k)``."""
    out = np.empty((t.size, sys.n))
    for lo in range(0, t.size, _CHUNK):
        tt = t[lo:lo + _CHUNK]
        E = matrix_exponential(tt[:, None, None] * sys.A)
        out[lo:lo + _CHUNK] = sys.c @ E
    return out


def cross_gram(sys: StateSpace, s, t) -> np.ndarray:
    """Matrix of inner products ``<g(s_a - .), g(t_i - .)>`` on ``[0, T]``.

    ``s`` and ``t`` are 1-D arrays of nonnegative times; the caller is
    responsible for keeping both inside the horizon.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    if np.any(s < 0) or np.any(t < 0):
        raise OutOfHorizon("inner products need nonnegative times")

    lo = np.minimum.outer(s, t)
    gap = np.abs(np.subtract.outer(s, t))

    mins, min_idx = np.unique(lo, return_inverse=True)
    Wc = _gramians(sys, mins) @ sys.c  # W(m) c for each distinct m

    gaps, gap_idx = np.unique(np.round(gap, _GAP_DECIMALS), return_inverse=True)
    rows = _output_rows(sys, gaps)  # c^T exp(A gap)

    min_idx = min_idx.reshape(lo.shape)
    gap_idx = gap_idx.reshape(lo.shape)
    return np.einsum("abk,abk->ab", rows[gap_idx], Wc[min_idx])


def gram_matrix(sys: StateSpace, times) -> np.ndarray:
    """Closed-form Grammian for strictly increasing positive ``times``.

    The horizon is ``T = times[-1]``. The result is symmetric bit-for-bit:
    the upper triangle is computed and mirrored.
    """
    t = validate_times(times)
    K = cross_gram(sys, t, t)
    upper = np.triu(K)
    return upper + np.triu(upper, 1).T


def h_matrix(sys: StateSpace, times) -> np.ndarray:
    """Initial-state matrix; row ``j`` is ``c^T exp(A t_j)``."""
    t = validate_times(times)
    return _output_rows(sys, t)


def build_operator(sys: StateSpace, times) -> GramOperator:
    t = validate_times(times)
    G = gram_matrix(sys, t)
    H = h_matrix(sys, t)
    for arr in (G, H, t):
        arr.setflags(write=False)
    return GramOperator(G, H, t)


# 7-point Gauss / 15-point Kronrod nodes on [-1, 1] (positive half).
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[[1, 3, 5, 13, 11, 9]] = np.concatenate([_WG[:-1], _WG[:-1]])
_GAUSS[7] = _WG[-1]


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    fx = f(0.5 * (a + b) + half * _NODES)
    k = half * (_KRONROD @ fx)
    g = half * (_GAUSS @ fx)
    return k, abs(k - g)


def adaptive_gk15(f, a: float, b: float, tol: float, max_panels: int = 1_000_000) -> float:
    """Globally adaptive Gauss-Kronrod(7, 15) integration of vectorized ``f``.

    Stops when the summed error estimate drops below the absolute ``tol``.
    """
    if b <= a:
        return 0.0
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    panels = 1
    while total_err > tol:
        if panels >= max_panels:
            raise QuadratureNonConvergence(
                f"error estimate {total_err:.3e} above tol {tol:.3e} after {panels} panels"
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        panels += 1
    # re-sum to shed the drift of the running total
    return float(sum(item[3] for item in heap))


def _reference_impulse(sys: StateSpace, T: float):
    A = np.array(sys.A)

    def g(tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape)
        inside = (tau >= 0.0) & (tau <= T)
        if np.any(inside):
            E = scipy.linalg.expm(tau[inside][:, None, None] * A)
            out[inside] = (E @ sys.b) @ sys.c
        return out

    return g


def gram_matrix_quadrature(sys: StateSpace, times, tol: float = 1e-10) -> np.ndarray:
    """Grammian by direct adaptive quadrature of its defining integral.

    Test oracle: it shares no code with :func:`gram_matrix` (the kernel is
    evaluated with SciPy's matrix exponential).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    t = validate_times(times)
    g = _reference_impulse(sys, float(t[-1]))
    N = t.size
    G = np.zeros((N, N))
    for i in range(N):
        for j in range(i, N):
            ti, tj = t[i], t[j]
            G[i, j] = G[j, i] = adaptive_gk15(lambda x: g(ti - x) * g(tj - x), 0.0, min(ti, tj), tol)
    return G
