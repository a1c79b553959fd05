"""Simple random walk on Z^2: return probabilities and overlap sums.

In rotated coordinates u = x1 + x2, v = x1 - x2 the planar walk splits into
two independent one-dimensional +-1 walks, so

    P(S_{2n} = 0) = (2^{-2n} binom(2n, n))^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "ReturnProbabilityTable",
    "OverlapSum",
    "return_probability",
    "return_probability_table",
    "overlap_sum",
    "overlap_sums",
    "coupling_constant",
    "convolution_return_probabilities",
]

# Below this index the central binomial is evaluated with exact integers.
_EXACT_CUTOFF = 512


@lru_cache(maxsize=1)
def _exact_head() -> np.ndarray:
    return np.array([float(Fraction(math.comb(2 * n, n), 4**n))
                     for n in range(_EXACT_CUTOFF + 1)])


def _central_binomial_probs(n: np.ndarray) -> np.ndarray:
    """2^{-2n} binom(2n, n), the 1d return probability at time 2n."""
    n = np.asarray(n, dtype=np.int64)
    out = np.empty(n.shape)
    small = n <= _EXACT_CUTOFF
    out[small] = _exact_head()[n[small]]
    big = n[~small].astype(np.float64)
    # asymptotic series of log(Gamma(n + 1/2) / Gamma(n + 1)); truncation error < 1e-25 here
    x = 1.0 / big
    x2 = x * x
    ser = x * (-1.0 / 8 + x2 * (1.0 / 192 + x2 * (-1.0 / 640 + x2 * 17.0 / 14336)))
    out[~small] = np.exp(ser) / np.sqrt(np.pi * big)
    return out


def return_probability(n: int) -> float:
    """P(S_{2n} = 0) for the simple random walk on Z^2 started at 0."""
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n == 0:
        return 1.0
    q = _central_binomial_probs(np.array([n]))
    return float((q * q)[0])


@dataclass(frozen=True)
class ReturnProbabilityTable:
    """Values p_{2n}(0) for n = 1..max_index (``values[n-1]``)."""

    max_index: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def padded(self) -> np.ndarray:
        """Array ``p`` with ``p[n] = p_{2n}(0)`` and ``p[0] = 1``."""
        return np.concatenate(([1.0], self.values))

    def __getitem__(self, n: int) -> float:
        if n == 0:
            return 1.0
        if not 1 <= n <= self.max_index:
            raise IndexError(f"index {n} outside table range 0..{self.max_index}")
        return float(self.values[n - 1])


@lru_cache(maxsize=8)
def _table(max_index: int) -> ReturnProbabilityTable:
    q = _central_binomial_probs(np.arange(1, max_index + 1))
    return ReturnProbabilityTable(max_index, q * q)


def return_probability_table(max_index: int) -> ReturnProbabilityTable:
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    return _table(int(max_index))


@dataclass(frozen=True)
class OverlapSum:
    """R_N: expected number of collisions of two independent walks up to time N."""

    horizon: int
    value: float


def overlap_sums(max_horizon: int) -> np.ndarray:
    """Array ``R`` with ``R[N] = sum_{n=1}^N p_{2n}(0)`` and ``R[0] = 0``."""
    table = return_probability_table(max_horizon)
    return np.concatenate(([0.0], np.cumsum(table.values)))


def overlap_sum(N: int) -> OverlapSum:
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return OverlapSum(N, float(overlap_sums(N)[N]))


def coupling_constant(beta_hat: float, N: int) -> float:
    """Intermediate-disorder inverse temperature beta_N = beta_hat / sqrt(R_N)."""
    if not beta_hat > 0:
        raise ValueError(f"beta_hat must be positive, got {beta_hat}")
    return beta_hat / math.sqrt(overlap_sum(N).value)


def convolution_return_probabilities(n_max: int):
    """Return probabilities by brute-force convolution of the step kernel.

    Propagates the full planar distribution for 2*n_max steps on a square
    grid. Returns ``(p, odd_mass)`` where ``p[n-1]`` is the mass at the
    origin after 2n steps and ``odd_mass[n-1]`` is the total mass found on
    sites with x1 + x2 odd after 2n steps (zero for a correct walk).
    """
    L = 2 * n_max
    size = 2 * L + 1
    dist = np.zeros((size, size))
    dist[L, L] = 1.0
    parity = (np.add.outer(np.arange(size), np.arange(size)) % 2).astype(bool)
    p = np.empty(n_max)
    odd = np.empty(n_max)
    for step in range(1, 2 * n_max + 1):
        nxt = np.zeros_like(dist)
        nxt[1:, :] += dist[:-1, :]
        nxt[:-1, :] += dist[1:, :]
        nxt[:, 1:] += dist[:, :-1]
        nxt[:, :-1] += dist[:, 1:]
        dist = 0.25 * nxt
        if step % 2 == 0:
            n = step // 2
            p[n - 1] = dist[L, L]
            odd[n - 1] = dist[parity].sum()
    return p, odd
