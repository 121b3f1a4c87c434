"""Network configuration, MAC parameter and per-slot contact probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace


class ConfigError(ValueError):
    """Raised when a configuration violates one or more parameter bounds.

    ``errors`` holds one message per violated bound.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class NetworkConfig:
    n: int
    m: int
    delta: float = 0.0
    q: float = 0.5
    lam: float = 0.001
    f: int = 1
    M: int = 1

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {fld.name: getattr(self, fld.name) for fld in fields(self)}


@dataclass(frozen=True)
class ContactProbabilities:
    p0: float
    p1: float
    p2: float
    alpha: int


def config_errors(cfg: NetworkConfig) -> list[str]:
    errors = []
    if cfg.n < 2:
        errors.append("n ≥ 2 required")
    if cfg.m < 4:
        errors.append("m ≥ 4 required")
    if not 0.0 < cfg.q < 1.0:
        errors.append("0 < q < 1 required")
    if not 0.0 <= cfg.lam < 1.0:
        errors.append("0 ≤ λ < 1 required")
    if not cfg.delta >= 0.0:
        errors.append("Δ ≥ 0 required")
    if cfg.f < 1:
        errors.append("f ≥ 1 required")
    if cfg.M < 1:
        errors.append("M ≥ 1 required")
    return errors


def validate_config(cfg: NetworkConfig) -> NetworkConfig:
    """Return ``cfg`` unchanged, or raise :class:`ConfigError` listing every violation."""
    errors = config_errors(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def compute_alpha(m: int, delta: float) -> int:
    """Equivalent-class spacing: ``min(ceil((1 + delta) * sqrt(8) + 2), m)``."""
    return min(math.ceil((1.0 + delta) * math.sqrt(8.0) + 2.0), m)


def _stay_out_prob(n: int, m: int) -> float:
    # ((m^2 - 1) / m^2) ** (n - 1) via log1p, stable for large n
    return math.exp((n - 1) * math.log1p(-1.0 / (m * m)))


def contact_probabilities(cfg: NetworkConfig) -> ContactProbabilities:
    """Per-slot probabilities that a backlogged source does a source-destination
    transmission (p0), a packet-dispatch transmission (p1), or neither (p2)."""
    validate_config(cfg)
    n, m = cfg.n, cfg.m
    alpha = compute_alpha(m, cfg.delta)
    m2 = m * m
    a2 = alpha * alpha
    stay = _stay_out_prob(n, m)
    nn1 = n * (n - 1)
    p0 = ((9 * n - m2) / nn1 - stay * (8 * n + 1 - m2) / nn1) / a2
    p1 = cfg.q * (m2 - 9) / (a2 * (n - 1)) * (1.0 - stay)
    return ContactProbabilities(p0=p0, p1=p1, p2=1.0 - p0 - p1, alpha=alpha)
