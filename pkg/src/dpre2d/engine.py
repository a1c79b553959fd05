"""Windowed normalized partition functions and the dyadic factorization.

For a time window (s, e] and start site x the engine computes

    Z = E_x[ exp( sum_{n=s+1}^{e} (beta * omega(n, S_n) - lambda(beta)) ) ]

where the walk starts at x at time 0 and moves freely up to time s.  All
windows of one replicate read the same environment, so ``W_N`` and the
dyadic factors ``Z_k`` are computed in a single pass over the time slices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .disorder import DisorderSpec, Family, log_mgf
from .walk import coupling_constant

__all__ = [
    "NumericRangeError",
    "TimeWindow",
    "DyadicGrid",
    "ExplicitEnvironment",
    "PartitionSample",
    "window_times",
    "dyadic_decompose",
    "partition_function",
    "log_partition_functions",
    "sample_all",
    "sample_batch",
]


class NumericRangeError(ArithmeticError):
    """A slice mass under- or overflowed even after renormalization."""

    def __init__(self, message, window_index=None, replicate=None):
        super().__init__(message)
        self.window_index = window_index
        self.replicate = replicate


def _ceil_power(N: int, x) -> int:
    """Exact ceil(N**x) for rational x = p/q, via t**q >= N**p."""
    fx = Fraction(x).limit_denominator(1_000_000)
    p, q = fx.numerator, fx.denominator
    if p == 0:
        return 1
    target = N**p
    t = max(1, math.ceil(N ** (p / q)))
    while (t - 1) ** q >= target and t > 1:
        t -= 1
    while t**q < target:
        t += 1
    return t


def window_times(N: int, a: float, b: float) -> tuple[int, int]:
    """Integer window (ceil(N^a), ceil(N^b)], with ceil(N^0) replaced by 0."""
    if not 0 <= a <= b <= 1:
        raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    s = 0 if a == 0 else _ceil_power(N, a)
    e = _ceil_power(N, b)
    return s, e


@dataclass(frozen=True)
class TimeWindow:
    """Disorder times {start_time + 1, ..., end_time}; the exponents are
    informational (None for windows given directly in times)."""

    start_time: int
    end_time: int
    start_exp: float | None = None
    end_exp: float | None = None

    def __post_init__(self):
        if not 0 <= self.start_time <= self.end_time:
            raise ValueError(f"invalid window ({self.start_time}, {self.end_time}]")
        if self.start_exp is not None and self.end_exp is not None:
            if not self.start_exp <= self.end_exp:
                raise ValueError("start exponent exceeds end exponent")

    @classmethod
    def from_exponents(cls, N: int, a: float, b: float) -> "TimeWindow":
        s, e = window_times(N, a, b)
        return cls(s, e, a, b)

    @property
    def disorder_times(self) -> range:
        return range(self.start_time + 1, self.end_time + 1)

    @property
    def empty(self) -> bool:
        return self.start_time == self.end_time


@dataclass(frozen=True)
class DyadicGrid:
    N: int
    M: int
    times: tuple

    @property
    def windows(self) -> list[TimeWindow]:
        return [TimeWindow(self.times[k], self.times[k + 1], k / self.M, (k + 1) / self.M)
                for k in range(self.M)]


def dyadic_decompose(N: int, M: int) -> DyadicGrid:
    """Times t_0 = 0 and t_k = ceil(N^{k/M}); t_M = N."""
    if N < 2 or M < 1:
        raise ValueError(f"need N >= 2 and M >= 1, got N={N}, M={M}")
    times = [0] + [_ceil_power(N, Fraction(k, M)) for k in range(1, M)] + [N]
    return DyadicGrid(N, M, tuple(times))


@dataclass(frozen=True)
class ExplicitEnvironment:
    """Handcrafted field: ``omega(n, x) = values[n, x1 - origin[0], x2 - origin[1]]``,
    zero outside the array.  Index 0 along time is unused."""

    values: np.ndarray
    origin: tuple = (0, 0)

    def shifted(self, dx) -> "ExplicitEnvironment":
        return ExplicitEnvironment(self.values, (self.origin[0] + dx[0], self.origin[1] + dx[1]))


def _assign_slots(starts, ends):
    """Greedy buffer-slot assignment for fields alive on (start, end]."""
    order = np.argsort(starts, kind="stable")
    slot_free_at = []
    slots = np.zeros(len(starts), dtype=np.int64)
    for f in order:
        for sl, t in enumerate(slot_free_at):
            if t <= starts[f]:
                slots[f] = sl
                slot_free_at[sl] = ends[f]
                break
        else:
            slots[f] = len(slot_free_at)
            slot_free_at.append(ends[f])
    return slots, max(1, len(slot_free_at))


def _prepare(windows):
    starts = np.array([w[0] for w in windows], dtype=np.int64)
    ends = np.array([w[1] for w in windows], dtype=np.int64)
    if np.any(starts < 0) or np.any(ends < starts):
        raise ValueError("windows must satisfy 0 <= start <= end")
    slots, nslots = _assign_slots(starts, ends)
    return starts, ends, slots, nslots


def _rotated(start):
    x1, x2 = int(start[0]), int(start[1])
    return x1 + x2, x1 - x2


def log_partition_functions(env, windows: Sequence[tuple[int, int]], beta: float,
                            start=(0, 0), replicates=None, family=None):
    """Log partition functions on several windows sharing one environment.

    ``env`` is a :class:`DisorderSpec` (keyed mode) or an
    :class:`ExplicitEnvironment`.  In keyed mode ``replicates`` may list
    several replicate indices; the result then has shape
    (len(replicates), len(windows)) and a status array of the same shape is
    returned alongside.
    """
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    starts, ends, slots, nslots = _prepare(windows)
    u0, v0 = _rotated(start)
    if isinstance(env, ExplicitEnvironment):
        fam = Family(family) if family is not None else Family.GAUSSIAN
        lam = log_mgf(fam, beta) if beta > 0 else 0.0
        table = np.ascontiguousarray(env.values, dtype=np.float64)
        logz, status = _kernels.sweep_table(table, int(env.origin[0]), int(env.origin[1]),
                                            float(beta), float(lam), u0, v0,
                                            starts, ends, slots, nslots)
        return logz, status
    spec: DisorderSpec = env
    lam = log_mgf(spec.family, beta) if beta > 0 else 0.0
    reps = np.atleast_1d(np.asarray(
        [spec.replicate] if replicates is None else replicates, dtype=np.int64))
    logz, status = _kernels.sweep_keyed(np.uint64(spec.master_seed), reps, spec.family.code,
                                        float(beta), float(lam), u0, v0, starts, ends, slots,
                                        nslots)
    if replicates is None:
        return logz[0], status[0]
    return logz, status


def partition_function(env, window: TimeWindow, start=(0, 0), beta: float = 0.0,
                       family=None) -> float:
    """Normalized partition function of one window started at ``start``."""
    logz, status = log_partition_functions(env, [(window.start_time, window.end_time)],
                                           beta, start=start, family=family)
    if status[0] != _kernels.STATUS_OK:
        raise NumericRangeError(f"slice mass out of range on window "
                                f"({window.start_time}, {window.end_time}]", window_index=0)
    return math.exp(logz[0])


@dataclass
class PartitionSample:
    replicate: int
    N: int
    M: int
    beta_hat: float
    log_w: float
    log_z: np.ndarray = field(repr=False)

    @property
    def w(self) -> float:
        return math.exp(self.log_w)

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.log_z)

    @property
    def u(self) -> np.ndarray:
        return self.z - 1.0

    @property
    def product(self) -> float:
        return float(np.prod(self.z))

    def row(self) -> dict:
        z = self.z
        return {
            "replicate": self.replicate,
            "N": self.N,
            "M": self.M,
            "beta_hat": self.beta_hat,
            "W_N": self.w,
            "log_W_N": self.log_w,
            "Z": z.tolist(),
            "product": self.product,
            "shared_environment": True,
        }


def _dyadic_windows(N, M):
    grid = dyadic_decompose(N, M)
    return grid, [(grid.times[k], grid.times[k + 1]) for k in range(M)]


def sample_batch(spec: DisorderSpec, N: int, M: int, beta_hat: float, replicates):
    """Raw arrays for many replicates: ``(log_w, log_z, status)`` with
    ``log_z`` of shape (R, M) and ``status`` of shape (R, M + 1)."""
    if not beta_hat > 0:
        raise ValueError("beta_hat must be positive")
    beta = coupling_constant(beta_hat, N)
    grid, dy = _dyadic_windows(N, M)
    if M == 1:
        # the single dyadic window is (0, N) itself
        logz, status = log_partition_functions(spec, [(0, N)], beta, replicates=replicates)
        return logz[:, 0].copy(), logz.copy(), np.repeat(status, 2, axis=1)
    logz, status = log_partition_functions(spec, [(0, N)] + dy, beta, replicates=replicates)
    return logz[:, 0].copy(), logz[:, 1:].copy(), status


def sample_all(spec: DisorderSpec, N: int, M: int, beta_hat: float) -> PartitionSample:
    """W_N and Z_1..Z_M on one shared environment realization."""
    log_w, log_z, status = sample_batch(spec, N, M, beta_hat, [spec.replicate])
    bad = np.flatnonzero(status[0] != _kernels.STATUS_OK)
    if bad.size:
        k = int(bad[0])
        raise NumericRangeError(
            "slice mass out of range " + ("on the full window" if k == 0 else f"in window {k}"),
            window_index=k, replicate=spec.replicate)
    return PartitionSample(spec.replicate, N, M, beta_hat, float(log_w[0]), log_z[0])
