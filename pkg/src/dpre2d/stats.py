"""Empirical statistics for replicate samples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "EmpiricalSample",
    "GaussianTarget",
    "Estimate",
    "wasserstein1_to_gaussian",
    "empirical_moment",
    "taylor_gap",
    "truncated_variance_sum",
    "l2_decoupling_gap",
    "jackknife_mean",
    "clt_target",
    "clt_report",
    "decay_report",
    "loglog_slope",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class EmpiricalSample:
    values: np.ndarray
    label: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size == 0:
            raise ValueError("empirical sample is empty")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("empirical sample contains non-finite values")


@dataclass(frozen=True)
class GaussianTarget:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr}


def _values(sample) -> np.ndarray:
    if isinstance(sample, EmpiricalSample):
        return sample.values
    return EmpiricalSample(sample).values


def _phi(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def wasserstein1_to_gaussian(sample, target: GaussianTarget) -> float:
    """W1 between the empirical law of ``sample`` and ``target``.

    Uses W1 = sum_i int_{(i-1)/n}^{i/n} |x_(i) - q(t)| dt with q the target
    quantile; each piece is split where q crosses x_(i) and integrated with
    int_a^c q(t) dt = mu (c - a) + sigma (phi(z_a) - phi(z_c)).
    """
    x = np.sort(_values(sample))
    n = x.size
    mu, sd = target.mean, target.sd
    grid = np.arange(n + 1) / n
    z = ndtri(grid)  # -inf at 0, +inf at 1
    za, zb = z[:-1], z[1:]
    zx = (x - mu) / sd
    zc = np.clip(zx, za, zb)
    a, b = grid[:-1], grid[1:]
    c = np.where(zx <= za, a, np.where(zx >= zb, b, ndtr(zc)))
    phi_a, phi_b, phi_c = _phi(za), _phi(zb), _phi(zc)
    int_ac = mu * (c - a) + sd * (phi_a - phi_c)
    int_cb = mu * (b - c) + sd * (phi_c - phi_b)
    pieces = x * (c - a) - int_ac + int_cb - x * (b - c)
    return float(np.sum(pieces))


def empirical_moment(sample, p: float, centered: bool = False) -> Estimate:
    """(1/n) sum |v_i|^p (about the sample mean if ``centered``) with its
    standard error."""
    if p < 1:
        raise ValueError("p must be >= 1")
    v = _values(sample)
    if centered:
        v = v - v.mean()
    a = np.abs(v) ** p
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("nan")
    return Estimate(float(a.mean()), se)


def taylor_gap(u) -> float:
    """|sum log(1 + u_k) - sum (u_k - u_k^2 / 2)| for one replicate."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(1.0 + u <= 0):
        raise ValueError("1 + u_k must be positive; a factor Z_k <= 0 indicates an engine bug")
    return float(abs(np.sum(np.log1p(u)) - np.sum(u - 0.5 * u * u)))


def truncated_variance_sum(u, alpha: float) -> float:
    """sum_k u_k^2 1{u_k^2 <= alpha / M}."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    u = np.asarray(u, dtype=np.float64)
    if u.size < 1:
        raise ValueError("need at least one factor")
    sq = u * u
    return float(np.sum(np.where(sq <= alpha / u.size, sq, 0.0)))


def jackknife_mean(values) -> Estimate:
    """Mean with leave-one-out jackknife standard error."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n < 2:
        return Estimate(float(v.mean()), float("nan"))
    loo = (v.sum() - v) / (n - 1)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return Estimate(float(v.mean()), se)


def l2_decoupling_gap(w, product) -> Estimate:
    """(1/n) sum (W^(i) - P^(i))^2 over replicates paired on one environment."""
    w = np.asarray(w, dtype=np.float64)
    product = np.asarray(product, dtype=np.float64)
    if w.shape != product.shape:
        raise ValueError("W_N and product samples must be paired replicate by replicate")
    return jackknife_mean((w - product) ** 2)


def clt_target(beta_hat: float) -> GaussianTarget:
    """N(-lambda^2 / 2, lambda^2) with lambda^2 = log(1 / (1 - beta_hat^2))."""
    if not 0 < beta_hat < 1:
        raise ValueError("Gaussian target exists only for 0 < beta_hat < 1")
    lam2 = -math.log1p(-beta_hat**2)
    return GaussianTarget(-0.5 * lam2, lam2)


def clt_report(log_w, beta_hat: float) -> dict:
    target = clt_target(beta_hat)
    v = _values(log_w)
    n = v.size
    var = float(v.var(ddof=1)) if n > 1 else 0.0
    # standard error of the sample variance from the fourth central moment
    m4 = float(np.mean((v - v.mean()) ** 4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / n) if n > 1 else float("nan")
    return {
        "beta_hat": beta_hat,
        "n": n,
        "target_mean": target.mean,
        "target_variance": target.variance,
        "mean": float(v.mean()),
        "mean_stderr": float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        "variance": var,
        "variance_stderr": var_se,
        "w1": wasserstein1_to_gaussian(v, target),
    }


def decay_report(w, beta_hat: float) -> dict:
    """Summary of W_N for runs without a Gaussian target."""
    v = _values(w)
    q = np.quantile(v, [0.1, 0.25, 0.5, 0.75, 0.9])
    return {
        "beta_hat": beta_hat,
        "n": int(v.size),
        "median": float(q[2]),
        "quantiles": dict(zip(["q10", "q25", "q50", "q75", "q90"], map(float, q))),
        "mean": float(v.mean()),
        "mean_stderr": float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan"),
    }


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
