"""Closed-form L2 smoothing spline coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonPositiveWeight, SingularSystem

__all__ = ["L2Config", "solve_l2", "l2_objective", "normal_residual", "accurate_residual"]


@dataclass(frozen=True)
class L2Config:
    lam: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam!r}")
        if self.weights is not None and np.any(np.asarray(self.weights) <= 0):
            raise NonPositiveWeight("weights must be positive")


def _check(G, weights, y):
    G = np.asarray(G, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    N = y.size
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if G.shape != (N, N) or w.size != N:
        raise DimensionMismatch(f"G {G.shape}, weights {w.shape}, y {y.shape} do not agree")
    if np.any(w <= 0):
        raise NonPositiveWeight("weights must be positive")
    return G, w, y


_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


def _two_prod(a, b):
    p = a * b
    ca = _SPLIT * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLIT * b
    bh = cb - (cb - b)
    bl = b - bh
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def accurate_residual(K, x, b) -> np.ndarray:
    """``b - K x`` as if computed in twice the working precision.

    Compensated dot products (Ogita, Rump & Oishi's Dot2), vectorized over
    rows. A plain ``K @ x`` loses everything below ``eps * sum |K_ij x_j|``,
    which for the large, cancelling spline coefficients is above the
    residual we want to certify.
    """
    K = np.asarray(K, dtype=float)
    s = np.array(b, dtype=float)
    c = np.zeros_like(s)
    for j in range(K.shape[1]):
        p, ep = _two_prod(-K[:, j], x[j])
        s, es = _two_sum(s, p)
        c += ep + es
    return s + c


def _system(G, w, lam):
    K = w[:, None] * G
    K[np.diag_indices_from(K)] += lam
    return K


def normal_residual(theta, G, weights, y, lam) -> float:
    """``||(lam I + W G) theta - W y||_inf``, evaluated with compensated sums.

    ``W G`` is formed in ordinary floating point, as the solver does.
    """
    G, w, y = _check(G, weights, y)
    theta = np.asarray(theta, dtype=float)
    return float(np.max(np.abs(accurate_residual(_system(G, w, lam), theta, w * y))))


def solve_l2(G, weights, y, lam: float, *, refine: int = 4) -> np.ndarray:
    """Optimal coefficients ``(lam I + W G)^{-1} W y``.

    The system is not symmetric (``W G``), so it is solved by LU with
    partial pivoting followed by iterative refinement whose residuals are
    accumulated in doubled precision.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    G, w, y = _check(G, weights, y)
    K = _system(G, w, lam)
    rhs = w * y
    try:
        lu = scipy.linalg.lu_factor(K, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"LU factorization failed: {exc}") from None
    if np.any(np.diag(lu[0]) == 0.0):
        raise SingularSystem("lam I + W G is singular")
    theta = scipy.linalg.lu_solve(lu, rhs)
    target = 1e-13 * np.max(np.abs(rhs))
    for _ in range(refine):
        r = accurate_residual(K, theta, rhs)
        if np.max(np.abs(r)) <= target:
            break
        theta = theta + scipy.linalg.lu_solve(lu, r)
    if not np.all(np.isfinite(theta)):
        raise SingularSystem("linear solve produced non-finite coefficients")
    return theta


def l2_objective(theta, G, weights, y, lam) -> float:
    """Smoothing cost restricted to the spline span: ``lam th'G th + sum w_i ((G th)_i - y_i)^2``.

    Uses ``int u^2 = th' G th`` for ``u = sum th_i g(t_i - .)``.
    """
    G, w, y = _check(G, weights, y)
    theta = np.asarray(theta, dtype=float)
    Gt = G @ theta
    return float(lam * theta @ Gt + np.sum(w * (Gt - y) ** 2))
