"""Evaluate a fitted spline: control signal, output curve, sparsity and error.

The control is a weighted sum of shifted impulse responses,

    u(t) = sum_i theta_i g(t_i - t),

and the output it produces from the initial state ``x0`` is

    y(t) = c^T exp(A t) x0 + sum_i theta_i <g(t - .), g(t_i - .)>,

where the inner products use the same closed form as the Grammian, so at
the sample times (with ``x0 = 0``) the curve reproduces ``G theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np

from .data_io import DataSet, format_float
from .errors import DimensionMismatch, OutOfHorizon
from .gramian import build_operator, cross_gram, validate_times
from .lti_model import StateSpace, matrix_exponential
from .solver_l1 import L1Config, SolverReport, solve_l1
from .solver_l2 import L2Config, l2_objective, normal_residual, solve_l2

__all__ = [
    "SplineFit",
    "control_signal",
    "output_curve",
    "sparsity_report",
    "fit_error",
    "default_grid",
    "fit_l1",
    "fit_l2",
    "curve_csv",
    "coefficients_csv",
]

_GAP_DECIMALS = 12
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class SplineFit:
    """Coefficients of a fitted spline together with everything needed to evaluate it.

    Attributes
    ----------
    theta : ndarray, shape (N,)
        Coefficients of the shifted impulse responses.
    x0 : ndarray, shape (n,) or None
        Initial state; ``None`` means the curve starts from rest.
    times : ndarray, shape (N,)
        Sample times ``t_1 < ... < t_N``; the horizon is ``times[-1]``.
    sys_ref : StateSpace
    config : L1Config, L2Config or None
    report : SolverReport or None
    """

    theta: np.ndarray
    x0: np.ndarray | None
    times: np.ndarray
    sys_ref: StateSpace
    config: Any = None
    report: SolverReport | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        times = validate_times(self.times).copy()
        if theta.size != times.size:
            raise DimensionMismatch(f"theta has {theta.size} entries but there are {times.size} times")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "times", times)
        if self.x0 is not None:
            x0 = np.array(self.x0, dtype=float).reshape(-1)
            if x0.size != self.sys_ref.n:
                raise DimensionMismatch(f"x0 has {x0.size} entries, system order is {self.sys_ref.n}")
            object.__setattr__(self, "x0", x0)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def N(self) -> int:
        return self.times.size


def _grid(fit: SplineFit, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise OutOfHorizon("evaluation times must be finite")
    if np.any(t < 0.0) or np.any(t > fit.T):
        bad = t[(t < 0.0) | (t > fit.T)].reshape(-1)[0]
        raise OutOfHorizon(f"t = {bad!r} lies outside [0, {fit.T!r}]")
    return t


def control_signal(fit: SplineFit, t):
    """Control ``u(t) = sum_i theta_i g(t_i - t)`` for ``t`` in ``[0, T]``.

    ``t`` may be a scalar or an array. Only samples with ``t_i >= t`` contribute,
    so the sum is carried backwards from the last sample: with
    ``q_k = sum_{i >= k} theta_i exp(A' (t_i - t_k)) c`` one has
    ``u(t) = b' exp(A' (t_k - t)) q_k`` for ``k`` the first sample at or after ``t``.
    """
    tt = _grid(fit, t)
    flat = tt.reshape(-1)
    sys = fit.sys_ref
    times, theta = fit.times, fit.theta
    N = times.size

    # backward accumulation of q_k
    steps = matrix_exponential(np.diff(times)[:, None, None] * sys.A.T)
    q = np.empty((N, sys.n))
    q[-1] = theta[-1] * sys.c
    for k in range(N - 2, -1, -1):
        q[k] = theta[k] * sys.c + steps[k] @ q[k + 1]

    k = np.searchsorted(times, flat, side="left")
    gap = times[np.minimum(k, N - 1)] - flat
    gaps, gap_idx = np.unique(np.round(gap, _GAP_DECIMALS), return_inverse=True)
    Eb = np.empty((gaps.size, sys.n))
    for lo in range(0, gaps.size, _CHUNK):
        g = gaps[lo:lo + _CHUNK]
        Eb[lo:lo + _CHUNK] = matrix_exponential(g[:, None, None] * sys.A) @ sys.b
    u = np.einsum("ij,ij->i", Eb[gap_idx.reshape(-1)], q[np.minimum(k, N - 1)])
    u[k >= N] = 0.0  # cannot happen inside [0, T]; kept for clarity
    return float(u[0]) if tt.ndim == 0 else u.reshape(tt.shape)


def output_curve(fit: SplineFit, grid) -> np.ndarray:
    """Output ``y(t)`` on ``grid`` (values in ``[0, T]``)."""
    g = _grid(fit, grid).reshape(-1)
    y = cross_gram(fit.sys_ref, g, fit.times) @ fit.theta
    if fit.x0 is not None:
        E = matrix_exponential(g[:, None, None] * fit.sys_ref.A)
        y = y + (fit.sys_ref.c @ E) @ fit.x0
    return y


def sparsity_report(theta, threshold: float = 1e-3) -> tuple[int, list, float]:
    """Entries with ``|theta_i| > threshold``: ``(count, indices, ||theta||_1)``."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    idx = np.flatnonzero(np.abs(theta) > threshold)
    return int(idx.size), idx.tolist(), float(np.abs(theta).sum())


def fit_error(fit: SplineFit, reference: Callable | np.ndarray, grid) -> tuple[float, float]:
    """RMSE and max-abs deviation of the fitted curve from ``reference`` on ``grid``.

    ``reference`` is either a callable of time or the reference values on ``grid``.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    ref = reference(grid) if callable(reference) else np.asarray(reference, dtype=float).reshape(-1)
    if ref.shape != grid.shape:
        raise DimensionMismatch(f"reference has {ref.size} values for {grid.size} grid points")
    err = output_curve(fit, grid) - ref
    return float(np.sqrt(np.mean(err**2))), float(np.max(np.abs(err)))


def default_grid(fit: SplineFit, points: int = 1001) -> np.ndarray:
    """``points`` uniform times covering ``[0, T]``."""
    if points < 2:
        raise ValueError("a grid needs at least two points")
    g = np.linspace(0.0, fit.T, points)
    g[-1] = fit.T
    return g


def fit_l1(sys: StateSpace, data: DataSet, config: L1Config) -> SplineFit:
    """Sparse fit; the dataset weights are used unless ``config`` carries its own."""
    if config.weights is None and np.any(data.weights != 1.0):
        config = replace(config, weights=np.asarray(data.weights))
    op = build_operator(sys, data.times)
    theta, x0, report = solve_l1(op.G, op.H, data.values, config)
    return SplineFit(theta, x0, op.times, sys, config, report)


def fit_l2(sys: StateSpace, data: DataSet, lam: float) -> SplineFit:
    """Closed-form quadratic fit with regularization ``lam``."""
    config = L2Config(lam=lam, weights=np.asarray(data.weights))
    op = build_operator(sys, data.times)
    theta = solve_l2(op.G, data.weights, data.values, lam)
    f = l2_objective(theta, op.G, data.weights, data.values, lam)
    report = SolverReport(
        solver_name="lu+refinement",
        iterations=1,
        objective_history=[f],
        kkt_residual=normal_residual(theta, op.G, data.weights, data.values, lam),
        converged=True,
    )
    return SplineFit(theta, None, op.times, sys, config, report)


def curve_csv(fit: SplineFit, grid, dest=None) -> str:
    """``t,y,u`` rows on ``grid`` at round-trip precision; written to ``dest`` if given."""
    grid = _grid(fit, grid).reshape(-1)
    y = output_curve(fit, grid)
    u = control_signal(fit, grid)
    lines = ["t,y,u"]
    lines += [f"{format_float(a)},{format_float(b)},{format_float(c)}" for a, b, c in zip(grid, y, u)]
    return _emit(lines, dest)


def coefficients_csv(fit: SplineFit, dest=None) -> str:
    """``i,t_i,theta_i`` rows (1-based ``i``)."""
    lines = ["i,t_i,theta_i"]
    lines += [f"{i + 1},{format_float(t)},{format_float(th)}" for i, (t, th) in enumerate(zip(fit.times, fit.theta))]
    return _emit(lines, dest)


def _emit(lines, dest) -> str:
    text = "\n".join(lines) + "\n"
    if dest is not None:
        with open(dest, "w", newline="\n") as fh:
            fh.write(text)
    return text
