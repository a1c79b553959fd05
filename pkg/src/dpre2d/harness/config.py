"""Experiment configuration and the flat ``key = value`` config format.

Example file::

    # clt check at two sizes
    kind = clt
    N = 64, 512
    beta_hat = 0.5
    family = rademacher
    master_seed = 2024
    replicates = 2000

Lines starting with ``#`` are comments; list values are comma-separated.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

from ..disorder import Family

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "parse_config_text", "load_config"]

KINDS = ("clt", "decouple", "moments", "taylor", "supercritical", "tables", "oracle")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message

    def to_dict(self):
        return {"error": "invalid_config", "field": self.field, "message": self.message}


@dataclass
class ExperimentConfig:
    kind: str
    N: list = field(default_factory=lambda: [64])
    M: list = field(default_factory=lambda: [1])
    beta_hat: list = field(default_factory=lambda: [0.5])
    family: str = "gaussian"
    master_seed: int = 0
    replicates: int = 100
    eps0: float = 0.5
    alpha: float = 1.0
    delta: float = 0.1
    out: str = "runs"
    workers: int = 0  # 0 means os.cpu_count()

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}, got {self.kind!r}")
        self.N = [int(v) for v in _as_list(self.N)]
        self.M = [int(v) for v in _as_list(self.M)]
        self.beta_hat = [float(v) for v in _as_list(self.beta_hat)]
        if not self.N or any(n < 2 for n in self.N):
            raise ConfigError("N", "every N must be >= 2")
        if not self.M or any(m < 1 for m in self.M):
            raise ConfigError("M", "every M must be >= 1")
        if not self.beta_hat or any(not b > 0 for b in self.beta_hat):
            raise ConfigError("beta_hat", "every beta_hat must be positive")
        if self.kind in ("clt", "decouple", "moments", "taylor", "oracle") and any(
                b >= 1 for b in self.beta_hat):
            raise ConfigError("beta_hat", f"kind {self.kind} needs beta_hat in (0, 1)")
        try:
            self.family = Family(self.family).value
        except ValueError:
            raise ConfigError("family", f"unknown disorder family {self.family!r}") from None
        if int(self.replicates) < 1:
            raise ConfigError("replicates", "must be >= 1")
        self.replicates = int(self.replicates)
        self.master_seed = int(self.master_seed)
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must fit in 64 unsigned bits")
        if not float(self.eps0) > 0:
            raise ConfigError("eps0", "must be positive")
        if not float(self.alpha) > 0:
            raise ConfigError("alpha", "must be positive")
        if not float(self.delta) > 0:
            raise ConfigError("delta", "must be positive")
        if int(self.workers) < 0:
            raise ConfigError("workers", "must be >= 0")
        self.eps0, self.alpha, self.delta = float(self.eps0), float(self.alpha), float(self.delta)
        self.workers = int(self.workers)

    @property
    def worker_count(self) -> int:
        return self.workers or os.cpu_count() or 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # results never depend on it
        return d

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        for key in mapping:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
        if "kind" not in mapping:
            raise ConfigError("kind", "missing")
        return cls(**mapping)


_LIST_KEYS = {"N", "M", "beta_hat"}


def _as_list(v):
    if isinstance(v, (list, tuple)):
        return list(v)
    if isinstance(v, str):
        return [s.strip() for s in v.split(",") if s.strip()]
    return [v]


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _LIST_KEYS:
            out[key] = _as_list(value)
        else:
            out[key] = value
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        mapping = parse_config_text(fh.read())
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(mapping)
