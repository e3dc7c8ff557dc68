"""Continuous-time single-input single-output state-space models.

The spline basis is generated by the impulse response of

    x'(t) = A x(t) + b u(t),   y(t) = c^T x(t),

so everything downstream needs a validated ``(A, b, c)`` triple and a
reliable matrix exponential.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput, NotControllable, NotObservable

__all__ = [
    "StateSpace",
    "make_state_space",
    "benchmark_system",
    "matrix_exponential",
    "impulse_response",
    "controllability_matrix",
    "observability_matrix",
    "numerical_rank",
    "load_system",
    "system_to_dict",
]

# Pade(13) numerator coefficients and the 1-norm bound below which it is
# accurate to unit roundoff (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Validated SISO system. Build it with :func:`make_state_space`."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __repr__(self) -> str:
        return f"StateSpace(n={self.n})"


def _as_finite(x, name):
    arr = np.array(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return arr


def numerical_rank(M: np.ndarray) -> int:
    """Rank with the threshold ``sigma > n * eps * sigma_max``."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = M.shape[0] * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def controllability_matrix(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``[b, Ab, ..., A^{n-1} b]``."""
    n = A.shape[0]
    cols = [b]
    for _ in range(n - 1):
        cols.append(A @ cols[-1])
    return np.column_stack(cols)


def observability_matrix(A: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``[c, A^T c, ..., (A^T)^{n-1} c]`` (columns)."""
    return controllability_matrix(A.T, c)


def make_state_space(A, b, c) -> StateSpace:
    """Validate ``(A, b, c)`` and return an immutable :class:`StateSpace`.

    Raises
    ------
    DimensionMismatch
        If ``A`` is not square or ``b``/``c`` do not have ``n`` entries.
    NonFiniteInput
        If any entry is NaN or Inf.
    NotControllable, NotObservable
        If the Kalman rank test fails; the message reports the rank found.
    """
    A = _as_finite(A, "A")
    b = _as_finite(b, "b")
    c = _as_finite(c, "c")
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DimensionMismatch(f"A must be a non-empty square matrix, got shape {A.shape}")
    n = A.shape[0]
    b = b.reshape(-1) if b.size == n else b
    c = c.reshape(-1) if c.size == n else c
    if b.shape != (n,):
        raise DimensionMismatch(f"b must have length {n}, got shape {b.shape}")
    if c.shape != (n,):
        raise DimensionMismatch(f"c must have length {n}, got shape {c.shape}")

    rc = numerical_rank(controllability_matrix(A, b))
    if rc < n:
        raise NotControllable(f"controllability matrix has rank {rc} < {n}")
    ro = numerical_rank(observability_matrix(A, c))
    if ro < n:
        raise NotObservable(f"observability matrix has rank {ro} < {n}")

    for arr in (A, b, c):
        arr.setflags(write=False)
    return StateSpace(A, b, c)


def benchmark_system() -> StateSpace:
    """Third-order realization of ``P(s) = 1 / (s^3 + 1)``."""
    A = [[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    return make_state_space(A, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])


def _pade13(M: np.ndarray) -> np.ndarray:
    b = _PADE13
    n = M.shape[-1]
    ident = np.broadcast_to(np.eye(n), M.shape)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (
        M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
        + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident
    )
    V = (
        M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
        + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident
    )
    return np.linalg.solve(V - U, V + U)


def matrix_exponential(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade(13) approximant.

    ``M`` may be a single ``(n, n)`` matrix or a stack ``(..., n, n)``; each
    matrix in a stack gets its own scaling power.
    """
    M = _as_finite(M, "M")
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionMismatch(f"expected square matrix (or stack), got shape {M.shape}")
    shape = M.shape
    n = shape[-1]
    if n == 0:
        return M.copy()
    flat = M.reshape(-1, n, n)

    norms = np.abs(flat).sum(axis=1).max(axis=1)
    with np.errstate(divide="ignore"):
        s = np.where(norms > _THETA13, np.ceil(np.log2(norms / _THETA13)), 0.0)
    s = s.astype(int)

    scaled = flat / np.ldexp(1.0, s)[:, None, None]
    R = _pade13(scaled)
    for step in range(int(s.max(initial=0))):
        idx = np.nonzero(s > step)[0]
        R[idx] = R[idx] @ R[idx]
    R[norms == 0.0] = np.eye(n)  # exact, where the rational solve is off by an ulp
    return R.reshape(shape)


def impulse_response(sys: StateSpace, tau, T: float):
    """``g(tau) = c^T exp(A tau) b`` on ``[0, T]``, zero elsewhere.

    Accepts a scalar or an array of lags; returns the same shape.
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape)
    inside = (tau >= 0.0) & (tau <= T)
    if np.any(inside):
        E = matrix_exponential(tau[inside][:, None, None] * sys.A)
        out[inside] = (E @ sys.b) @ sys.c
    return float(out) if out.ndim == 0 else out


def load_system(path) -> StateSpace:
    """Read a system JSON file with keys ``"A"``, ``"b"``, ``"c"``."""
    data = json.loads(Path(path).read_text())
    try:
        return make_state_space(data["A"], data["b"], data["c"])
    except KeyError as exc:
        raise DimensionMismatch(f"system file is missing key {exc}") from None


def system_to_dict(sys: StateSpace) -> dict:
    return {"A": sys.A.tolist(), "b": sys.b.tolist(), "c": sys.c.tolist()}
