"""Source-delay analysis of PD-f MANETs: QBD model plus slot-level simulator."""

from .delay import PhaseTypeRep, cdf, mean, phase_type, pmf, quantile, variance
from .params import (ConfigError, ContactProbabilities, NetworkConfig, compute_alpha,
                     contact_probabilities, validate_config)
from .steady import conditional_distribution, solve_pi_omega, solve_pi_omega_dense

__all__ = [
    "ConfigError", "ContactProbabilities", "NetworkConfig", "PhaseTypeRep",
    "cdf", "compute_alpha", "conditional_distribution", "contact_probabilities",
    "mean", "phase_type", "pmf", "quantile", "solve_pi_omega", "solve_pi_omega_dense",
    "validate_config", "variance",
]
