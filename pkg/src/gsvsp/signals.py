"""Uniformly sampled signals with truncation, truncated inner products and norms.

Horizons ``T`` are snapped to the nearest grid point, and integrals use the
trapezoidal rule on the uniform grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

# relative slack when checking that T lies inside the grid span
_SPAN_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Samples of a vector signal on the grid ``t_k = k * step``, ``k = 0..m-1``.

    ``samples`` has shape ``(m, n)``; scalar signals are stored with ``n = 1``.
    """

    step: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidInputError("step must be positive")
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] == 0:
            raise InvalidInputError(f"samples must be a nonempty (m, n) array, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def start_time(self) -> float:
        return 0.0

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(len(self))

    @property
    def duration(self) -> float:
        return self.step * (len(self) - 1)

    @classmethod
    def from_function(cls, fn, step: float, horizon: float) -> "SampledSignal":
        m = int(round(horizon / step)) + 1
        return cls(step, np.array([np.atleast_1d(fn(k * step)) for k in range(m)], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, SampledSignal):
            return NotImplemented
        return self.step == other.step and np.array_equal(self.samples, other.samples)

    __hash__ = None


def snap_index(sig: SampledSignal, T: float) -> int:
    """Grid index nearest to ``T``; errors if ``T`` is negative or past the end."""
    if T < 0:
        raise InvalidInputError(f"T must be non-negative, got {T}")
    if T > sig.duration * (1 + _SPAN_RTOL) + 0.5 * sig.step:
        raise InvalidInputError(f"T = {T} lies beyond the grid span {sig.duration}")
    return min(int(round(T / sig.step)), len(sig) - 1)


def truncate(sig: SampledSignal, T: float) -> SampledSignal:
    if T < 0:
        raise InvalidInputError(f"T must be non-negative, got {T}")
    k = min(int(round(T / sig.step)), len(sig) - 1)
    out = np.zeros_like(sig.samples)
    out[: k + 1] = sig.samples[: k + 1]
    return SampledSignal(sig.step, out)


def _check_pair(u: SampledSignal, y: SampledSignal):
    if u.step != y.step or len(u) != len(y) or u.dim != y.dim:
        raise InvalidInputError("signals do not share grid and dimension")


def inner_product_truncated(u: SampledSignal, y: SampledSignal, T: float) -> float:
    """Trapezoidal approximation of the integral of ``u(t)^T y(t)`` over ``[0, T]``."""
    _check_pair(u, y)
    k = snap_index(u, T)
    if k == 0:
        return 0.0
    p = np.einsum("ij,ij->i", u.samples[: k + 1], y.samples[: k + 1])
    return float(u.step * (p.sum() - 0.5 * (p[0] + p[-1])))


def cumulative_inner_product(u: SampledSignal, y: SampledSignal) -> np.ndarray:
    """``<u, y>_T`` for every grid horizon ``T = t_k`` at once."""
    _check_pair(u, y)
    p = np.einsum("ij,ij->i", u.samples, y.samples)
    out = np.zeros(len(p))
    out[1:] = np.cumsum(0.5 * u.step * (p[1:] + p[:-1]))
    return out


def l2t_norm(u: SampledSignal, T: float) -> float:
    return float(np.sqrt(max(inner_product_truncated(u, u, T), 0.0)))


def linf_norm(u: SampledSignal) -> float:
    return float(np.max(np.abs(u.samples)))


def write_csv(path, step: float, channels: dict[str, np.ndarray]) -> None:
    """Write named channels on a shared grid as ``t,<name>_1..<name>_n`` columns."""
    arrays = {}
    m = None
    for name, data in channels.items():
        a = np.asarray(data, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if m is None:
            m = a.shape[0]
        elif a.shape[0] != m:
            raise InvalidInputError(f"channel {name!r} has {a.shape[0]} samples, expected {m}")
        arrays[name] = a
    header = ["t"] + [f"{name}_{j + 1}" for name, a in arrays.items() for j in range(a.shape[1])]
    table = np.hstack([step * np.arange(m)[:, None]] + list(arrays.values()))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in table:
            w.writerow([f"{v:.15g}" for v in row])


def read_csv(path) -> dict[str, SampledSignal]:
    """Inverse of :func:`write_csv`; columns are regrouped by their ``<name>_`` prefix."""
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if header[0] != "t":
        raise InvalidInputError("first CSV column must be 't'")
    t = body[:, 0]
    step = float(t[1] - t[0]) if len(t) > 1 else 1.0
    groups: dict[str, list[int]] = {}
    for j, col in enumerate(header[1:], start=1):
        name, _, _ = col.rpartition("_")
        groups.setdefault(name, []).append(j)
    return {name: SampledSignal(step, body[:, cols]) for name, cols in groups.items()}
