"""Datasets: CSV I/O, seeded Laplace noise and the synthetic benchmark.

Random numbers come from SplitMix64 used as a counter-based generator: the
k-th draw for a given seed is ``mix(seed + (k + 1) * 0x9E3779B97F4A7C15)``
with the finalizer

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

all in wrapping 64-bit unsigned arithmetic. The top 53 bits give a uniform
double on the open interval (0, 1). Being stateless per index it vectorizes
and reproduces on any platform with 64-bit integers.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DuplicateTime, NonFiniteInput, NonPositiveTime, NonPositiveWeight, ParseError

__all__ = [
    "DataSet",
    "make_dataset",
    "read_dataset",
    "write_dataset",
    "format_float",
    "splitmix64_uniform",
    "laplace_scale",
    "laplace_noise",
    "benchmark_times",
    "benchmark_reference",
    "synth_paper_dataset",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True, eq=False)
class DataSet:
    times: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    @property
    def T(self) -> float:
        return float(self.times[-1])


def make_dataset(times, values, weights=None) -> DataSet:
    """Validate arrays and build a :class:`DataSet` (input must already be sorted)."""
    t = np.array(times, dtype=float).reshape(-1)
    y = np.array(values, dtype=float).reshape(-1)
    w = np.ones_like(t) if weights is None else np.array(weights, dtype=float).reshape(-1)
    if not (t.size == y.size == w.size) or t.size == 0:
        raise ParseError(f"lengths differ or empty: times={t.size}, values={y.size}, weights={w.size}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise NonFiniteInput("dataset contains NaN or Inf")
    if t[0] <= 0.0:
        raise NonPositiveTime(f"sample times must be > 0, got {t[0]!r}")
    d = np.diff(t)
    if np.any(d == 0.0):
        k = int(np.nonzero(d == 0.0)[0][0])
        raise DuplicateTime(f"duplicate sample time {t[k]!r}")
    if np.any(d < 0.0):
        raise ParseError("sample times are not sorted")
    if np.any(w <= 0.0):
        k = int(np.nonzero(w <= 0.0)[0][0])
        raise NonPositiveWeight(f"weight at t={t[k]!r} is {w[k]!r}; weights must be > 0")
    for arr in (t, y, w):
        arr.setflags(write=False)
    return DataSet(t, y, w)


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ParseError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None


def read_dataset(source) -> DataSet:
    """Parse a ``t,y`` or ``t,y,w`` CSV.

    ``source`` may be a path, an open text file, or a string holding the
    CSV text itself (recognized by containing a newline). Rows are sorted
    by ``t``; a missing ``w`` column means unit weights.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        text = Path(source).read_text()

    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty dataset") from None
    if header not in (["t", "y"], ["t", "y", "w"]):
        raise ParseError(f"row 1: header must be 't,y' or 't,y,w', got {','.join(header)!r}")

    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != len(header):
            raise ParseError(f"row {lineno}: expected {len(header)} fields, got {len(rec)}")
        rows.append([_parse_float(f, lineno, h) for f, h in zip(rec, header)])
    if not rows:
        raise ParseError("dataset has no data rows")

    data = np.array(rows)
    data = data[np.argsort(data[:, 0], kind="stable")]
    weights = data[:, 2] if data.shape[1] == 3 else None
    return make_dataset(data[:, 0], data[:, 1], weights)


def format_float(x: float) -> str:
    """Shortest string that round-trips the double exactly."""
    return repr(float(x))


def write_dataset(ds: DataSet, dest=None, *, with_weights: bool | None = None) -> str:
    """Write ``ds`` as CSV (LF endings). Returns the text; writes it if ``dest`` is given.

    The ``w`` column is emitted when any weight differs from 1 unless
    ``with_weights`` forces the choice.
    """
    if with_weights is None:
        with_weights = bool(np.any(ds.weights != 1.0))
    lines = ["t,y,w" if with_weights else "t,y"]
    for i in range(len(ds)):
        fields = [format_float(ds.times[i]), format_float(ds.values[i])]
        if with_weights:
            fields.append(format_float(ds.weights[i]))
        lines.append(",".join(fields))
    text = "\n".join(lines) + "\n"
    if dest is not None:
        with open(dest, "w", newline="\n") as fh:
            fh.write(text)
    return text


def splitmix64_uniform(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """``count`` uniforms on (0, 1) from the SplitMix64 stream of ``seed``."""
    k = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed % (1 << 64)) + k * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def laplace_scale(variance: float) -> float:
    """Scale ``b`` of a zero-mean Laplace law with the given variance (Var = 2 b^2)."""
    return math.sqrt(variance / 2.0)


def laplace_noise(seed: int, variance: float, count: int) -> np.ndarray:
    """I.i.d. zero-mean Laplace samples by inverse CDF of seeded uniforms."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    b = laplace_scale(variance)
    v = splitmix64_uniform(seed, count) - 0.5
    return -b * np.sign(v) * np.log1p(-2.0 * np.abs(v))


def benchmark_times(N: int = 501) -> np.ndarray:
    """``t_i = 0.1 + 0.01 (i - 1)``, 100 Hz from 0.1 s."""
    return 0.1 + 0.01 * np.arange(N)


def benchmark_reference(t):
    """Noiseless benchmark curve ``sin(2t) + 1``."""
    return np.sin(2.0 * np.asarray(t, dtype=float)) + 1.0


def synth_paper_dataset(seed: int, variance: float = 1.0) -> tuple[DataSet, Callable]:
    """501 noisy samples of ``sin(2t) + 1`` with unit weights.

    ``variance=0`` gives the noiseless samples.
    """
    t = benchmark_times()
    y = benchmark_reference(t)
    if variance > 0:
        y = y + laplace_noise(seed, variance, t.size)
    return make_dataset(t, y), benchmark_reference
