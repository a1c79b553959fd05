"""Environment field omega(n, x) and its cumulant functions."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _prf

__all__ = [
    "Family",
    "DisorderSpec",
    "CumulantPair",
    "cumulants",
    "log_mgf",
    "sample_site",
    "sample_sites",
    "split_seed",
]

_MASK64 = (1 << 64) - 1


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"

    @property
    def code(self) -> int:
        return _prf.FAMILY_GAUSSIAN if self is Family.GAUSSIAN else _prf.FAMILY_RADEMACHER


@dataclass(frozen=True)
class DisorderSpec:
    """Identifies one realization of the i.i.d. field.

    The same ``(family, master_seed, replicate)`` always reads the same
    values at every ``(n, x)``; different replicates are independent.
    """

    family: Family = Family.GAUSSIAN
    master_seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.replicate < 0:
            raise ValueError("replicate must be non-negative")

    def with_replicate(self, replicate: int) -> "DisorderSpec":
        return DisorderSpec(self.family, self.master_seed, replicate)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "master_seed": self.master_seed,
                "replicate": self.replicate}


def split_seed(master_seed: int, *indices: int) -> int:
    """Derive a child seed from ``master_seed`` and a path of indices."""
    s = master_seed & _MASK64
    for i in indices:
        s = int(_prf.replicate_key(np.uint64(s), int(i)))
    return s


def sample_site(spec: DisorderSpec, n: int, x) -> float:
    """omega(n, x) for the realization ``spec``; defined at every (n, x)."""
    x1, x2 = x
    return float(_prf.site_value(np.uint64(spec.master_seed), spec.replicate,
                                 int(n), int(x1), int(x2), spec.family.code))


def sample_sites(spec: DisorderSpec, n, x1, x2) -> np.ndarray:
    """Vectorized ``sample_site`` over broadcast arrays of coordinates."""
    n, x1, x2 = np.broadcast_arrays(np.asarray(n, np.int64), np.asarray(x1, np.int64),
                                    np.asarray(x2, np.int64))
    shape = n.shape
    out = _prf.site_values(np.uint64(spec.master_seed), spec.replicate,
                           np.ascontiguousarray(n).ravel(), np.ascontiguousarray(x1).ravel(),
                           np.ascontiguousarray(x2).ravel(), spec.family.code)
    return out.reshape(shape)


def log_mgf(family, beta: float) -> float:
    """lambda(beta) = log E[exp(beta * omega)]."""
    family = Family(family)
    if family is Family.GAUSSIAN:
        return 0.5 * beta * beta
    b = abs(beta)
    if b < 20.0:
        # cosh b - 1 = 2 sinh^2(b/2) keeps full precision near 0
        return math.log1p(2.0 * math.sinh(0.5 * b) ** 2)
    return b + math.log1p(math.exp(-2.0 * b)) - math.log(2.0)


@dataclass(frozen=True)
class CumulantPair:
    lam: float
    lam2: float
    big_lambda: float


def cumulants(family, beta: float) -> CumulantPair:
    """lambda(beta), lambda_2(beta) = lambda(2 beta) - 2 lambda(beta) and
    the collision weight Lambda = exp(lambda_2) - 1."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    try:
        family = Family(family)
    except ValueError:
        raise ValueError(f"no closed-form log-MGF for family {family!r}") from None
    lam = log_mgf(family, beta)
    # closed forms avoid cancellation in lambda(2 beta) - 2 lambda(beta)
    if family is Family.GAUSSIAN:
        lam2 = beta * beta
        return CumulantPair(lam, lam2, math.expm1(lam2) if lam2 < 709.0 else math.inf)
    t2 = math.tanh(beta) ** 2  # cosh(2b) / cosh(b)^2 = 1 + tanh(b)^2
    return CumulantPair(lam, math.log1p(t2), t2)
