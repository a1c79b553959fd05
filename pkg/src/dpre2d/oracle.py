"""Exact second moments of windowed partition functions.

Two independent walks collide at time n with probability p_{2n}(0), and
each collision inside the window multiplies the replica weight by
1 + Lambda.  Expanding the product over collision times gives

    E[Z_{s,e}^2] = 1 + sum_k Lambda^k sum_{s < n_1 < ... < n_k <= e}
                       prod_i p_{2(n_i - n_{i-1})}(0),      n_0 = 0,

which :func:`exact_second_moment` evaluates as a renewal recursion.
:func:`brute_force_second_moment` enumerates path pairs instead.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .disorder import cumulants
from .engine import dyadic_decompose
from .walk import coupling_constant, overlap_sums, return_probability_table

__all__ = [
    "MomentTable",
    "collision_weight",
    "exact_second_moment",
    "brute_force_second_moment",
    "limit_second_moment",
    "lambda_MN",
    "lambda_limit",
    "geometric_bound",
    "moment_table",
    "BRUTE_FORCE_CAP",
]

BRUTE_FORCE_CAP = 6


def collision_weight(beta_hat: float, N: int, family="gaussian") -> float:
    """Lambda_N = exp(lambda_2(beta_N)) - 1 at beta_N = beta_hat / sqrt(R_N)."""
    return cumulants(family, coupling_constant(beta_hat, N)).big_lambda


def exact_second_moment(s: int, e: int, big_lambda: float, table=None) -> float:
    """E[Z^2] on the window (s, e] by the renewal recursion.

    ``u[n] = Lambda * sum_{m in {0} U (s, n)} u[m] p_{2(n-m)}(0)``, ``u[0] = 1``;
    the result is ``1 + sum_{s < n <= e} u[n]``.
    """
    if not 0 <= s <= e:
        raise ValueError(f"need 0 <= s <= e, got s={s}, e={e}")
    if big_lambda < 0:
        raise ValueError("Lambda must be non-negative")
    if table is None:
        table = return_probability_table(max(e, 1))
    if e > table.max_index:
        raise ValueError(f"return-probability table covers n <= {table.max_index}, need {e}")
    if s == e or big_lambda == 0:
        return 1.0
    p = table.padded()
    L = p.shape[0] - 1
    prev = p[::-1].copy()  # prev[L - k] = p[k]
    u = np.zeros(e + 1)
    for n in range(s + 1, e + 1):
        tot = p[n]  # m = 0 term, u[0] = 1
        if n > s + 1:
            tot += np.dot(u[s + 1:n], prev[L - n + s + 1:L])
        u[n] = big_lambda * tot
    return 1.0 + float(np.sum(u[s + 1:]))


def _all_paths(N: int) -> np.ndarray:
    steps = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)])
    idx = np.array(list(itertools.product(range(4), repeat=N)), dtype=np.int64).reshape(-1, N)
    return np.cumsum(steps[idx], axis=1)  # (4^N, N, 2); column n-1 holds S_n


def brute_force_second_moment(N: int, big_lambda: float, window=None) -> float:
    """Average of (1 + Lambda)^{#collisions} over all 4^{2N} path pairs.

    Collisions are counted at times in ``window = (s, e]`` (default (0, N]).
    """
    if N > BRUTE_FORCE_CAP:
        raise ValueError(f"enumeration capped at N = {BRUTE_FORCE_CAP}, got {N}")
    if N < 1:
        raise ValueError("N must be >= 1")
    s, e = (0, N) if window is None else window
    if not 0 <= s <= e <= N:
        raise ValueError("window must lie inside (0, N]")
    # encode each position as one integer so pair comparisons are cheap
    pos = _all_paths(N)[:, s:e, :]
    code = (pos[..., 0] + 2 * N + 1) * (4 * N + 3) + pos[..., 1] + 2 * N + 1
    weight = np.log1p(big_lambda)
    total = 0.0
    chunk = max(1, (1 << 22) // max(1, code.shape[0]))
    for i in range(0, code.shape[0], chunk):
        hits = (code[i:i + chunk, None, :] == code[None, :, :]).sum(axis=2)
        total += np.exp(weight * hits).sum()
    return total / float(code.shape[0]) ** 2


def limit_second_moment(a: float, b: float, beta_hat: float) -> float:
    """Large-N limit (1 - a beta_hat^2) / (1 - b beta_hat^2) of E[Z_{a,b}^2]."""
    if not 0 <= a <= b <= 1:
        raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    if not 0 < beta_hat < 1:
        raise ValueError("limit exists only for 0 < beta_hat < 1")
    return (1.0 - a * beta_hat**2) / (1.0 - b * beta_hat**2)


def lambda_limit(beta_hat: float) -> float:
    """lambda^2 = log(1 / (1 - beta_hat^2))."""
    if not 0 < beta_hat < 1:
        raise ValueError("need 0 < beta_hat < 1")
    return -math.log1p(-beta_hat**2)


@dataclass
class MomentTable:
    N: int
    M: int
    beta_hat: float
    family: str
    big_lambda: float
    times: tuple
    second_moments: np.ndarray

    @property
    def var_u(self) -> np.ndarray:
        return self.second_moments - 1.0

    @property
    def lambda_MN(self) -> float:
        return float(np.sum(self.var_u))

    def limits(self) -> np.ndarray:
        if not 0 < self.beta_hat < 1:
            return np.full(self.M, np.nan)
        return np.array([limit_second_moment(k / self.M, (k + 1) / self.M, self.beta_hat)
                         for k in range(self.M)])

    def rows(self) -> list[dict]:
        running = np.cumsum(self.var_u)
        lim = self.limits()
        return [{"k": k + 1, "t_prev": self.times[k], "t_k": self.times[k + 1],
                 "second_moment": float(self.second_moments[k]),
                 "var_u": float(self.var_u[k]), "running_lambda_MN": float(running[k]),
                 "limit": float(lim[k])}
                for k in range(self.M)]


def moment_table(N: int, M: int, beta_hat: float, family="gaussian") -> MomentTable:
    grid = dyadic_decompose(N, M)
    big_lambda = collision_weight(beta_hat, N, family)
    table = return_probability_table(N)
    sm = np.array([exact_second_moment(grid.times[k], grid.times[k + 1], big_lambda, table)
                   for k in range(M)])
    return MomentTable(N, M, beta_hat, str(getattr(family, "value", family)), big_lambda,
                       grid.times, sm)


def lambda_MN(N: int, M: int, beta_hat: float, family="gaussian") -> float:
    """sum_k (E[Z_k^2] - 1) over the dyadic windows."""
    return moment_table(N, M, beta_hat, family).lambda_MN


def geometric_bound(N: int, big_lambda: float):
    """Upper bound 1 + Lambda R_N / (1 - Lambda R_N) on E[W_N^2], or None
    when Lambda R_N >= 1."""
    r = overlap_sums(N)[N]
    x = big_lambda * r
    if x >= 1:
        return None
    return 1.0 + x / (1.0 - x)
