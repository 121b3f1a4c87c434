"""Discrete phase-type law of the source delay: PMF, CDF, moments, quantiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .params import NetworkConfig, contact_probabilities
from .qbd import absorbing_parts, spectral_radius
from .steady import conditional_distribution, solve_pi_omega

HORIZON_START = 1024
HORIZON_CAP = 2 ** 26
TAIL_TOL = 1e-12


class HorizonError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseTypeRep:
    """Initial row ``pi_minus``, transient block ``T`` and exit column ``c_plus``."""

    pi_minus: np.ndarray
    T: np.ndarray
    c_plus: np.ndarray

    def __post_init__(self):
        d = self.pi_minus.shape[0]
        if self.T.shape != (d, d) or self.c_plus.shape != (d,):
            raise ValueError("inconsistent phase-type dimensions")

    @property
    def order(self) -> int:
        return self.pi_minus.shape[0]

    def conservation_error(self) -> float:
        return float(np.abs(self.T.sum(axis=1) + self.c_plus - 1.0).max())

    def spectral_radius(self) -> float:
        return spectral_radius(self.T)


def phase_type(cfg: NetworkConfig) -> PhaseTypeRep:
    probs = contact_probabilities(cfg)
    cond = conditional_distribution(cfg, solve_pi_omega(cfg))
    T, c_plus = absorbing_parts(cfg, probs)
    return PhaseTypeRep(pi_minus=cond.values[1:].copy(), T=T, c_plus=c_plus)


def geometric_rep(success: float) -> PhaseTypeRep:
    """One-phase representation with per-slot exit probability ``success``."""
    return PhaseTypeRep(np.array([1.0]), np.array([[1.0 - success]]), np.array([success]))


# -- distribution functions -------------------------------------------------

def pmf(rep: PhaseTypeRep, u: int) -> float:
    if u < 1:
        raise ValueError("pmf defined for u ≥ 1")
    v = rep.pi_minus
    for _ in range(u - 1):
        v = v @ rep.T
    return float(v @ rep.c_plus)


def cdf(rep: PhaseTypeRep, u: int) -> float:
    if u < 0:
        raise ValueError("cdf defined for u ≥ 0")
    v = rep.pi_minus
    for _ in range(u):
        v = v @ rep.T
    return float(1.0 - v.sum())


def pmf_array(rep: PhaseTypeRep, u_max: int) -> np.ndarray:
    """``out[u-1] = Pr{U = u}`` for u = 1..u_max."""
    out = np.empty(u_max)
    v = rep.pi_minus
    for k in range(u_max):
        out[k] = v @ rep.c_plus
        v = v @ rep.T
    return out


def survival_array(rep: PhaseTypeRep, u_max: int) -> np.ndarray:
    """``out[u] = Pr{U > u}`` for u = 0..u_max."""
    out = np.empty(u_max + 1)
    v = rep.pi_minus
    for k in range(u_max + 1):
        out[k] = v.sum()
        v = v @ rep.T
    return out


def cdf_array(rep: PhaseTypeRep, u_max: int) -> np.ndarray:
    """``out[u] = Pr{U ≤ u}`` for u = 0..u_max."""
    return 1.0 - survival_array(rep, u_max)


def adaptive_horizon(rep: PhaseTypeRep, tail_tol: float = TAIL_TOL,
                     start: int = HORIZON_START, cap: int = HORIZON_CAP) -> int:
    """Smallest power-of-two multiple of ``start`` with tail mass below ``tail_tol``."""
    horizon = start
    v = rep.pi_minus
    done = 0
    while True:
        for _ in range(horizon - done):
            v = v @ rep.T
        done = horizon
        if v.sum() < tail_tol:
            return horizon
        if horizon >= cap:
            raise HorizonError(f"tail mass {v.sum():.3e} still above {tail_tol} at u = {cap}")
        horizon *= 2


# -- moments ----------------------------------------------------------------

def _lu(rep: PhaseTypeRep):
    # rebuild the diagonal from the exit vector and the off-diagonal row sums
    # instead of 1 - T_ii, which cancels badly when absorption is slow
    I_minus_T = -rep.T.copy()
    np.fill_diagonal(I_minus_T, 0.0)
    np.fill_diagonal(I_minus_T, rep.c_plus - I_minus_T.sum(axis=1))
    lu = lu_factor(I_minus_T)
    return I_minus_T, lu


def _solve_checked(lu, A, b):
    x = lu_solve(lu, b)
    res = np.abs(A @ x - b).max()
    if not np.isfinite(res) or res > 1e-8 * max(1.0, np.abs(b).max()):
        raise np.linalg.LinAlgError(f"(I - T) is near-singular; residual {res:.3e}")
    return x


def mean(rep: PhaseTypeRep) -> float:
    A, lu = _lu(rep)
    x = _solve_checked(lu, A, rep.c_plus)
    x = _solve_checked(lu, A, x)
    return float(rep.pi_minus @ x)


def second_factorial_terms(rep: PhaseTypeRep) -> tuple[float, float]:
    """Return ``(mean, E[U^2])`` sharing one LU factorization of ``I - T``."""
    A, lu = _lu(rep)
    x1 = _solve_checked(lu, A, rep.c_plus)
    x2 = _solve_checked(lu, A, x1)
    x3 = _solve_checked(lu, A, x2)
    m1 = float(rep.pi_minus @ x2)
    m2 = float(rep.pi_minus @ (x3 + rep.T @ x3))
    return m1, m2


def variance(rep: PhaseTypeRep) -> float:
    m1, m2 = second_factorial_terms(rep)
    return max(m2 - m1 * m1, 0.0)


def quantile(rep: PhaseTypeRep, p: float) -> int:
    """Smallest integer ``u`` with ``cdf(u) ≥ p``."""
    if not 0.0 <= p < 1.0:
        raise ValueError("quantile needs 0 ≤ p < 1")
    if p == 0.0:
        return 0
    # doubling: grow the cached CDF until it reaches p
    hi = 1
    cdfs = cdf_array(rep, hi)
    while cdfs[hi] < p:
        if hi >= HORIZON_CAP:
            raise HorizonError(f"cdf below {p} at u = {hi}")
        hi *= 2
        cdfs = cdf_array(rep, hi)
    lo = hi // 2 if hi > 1 else 0
    while lo < hi:
        mid = (lo + hi) // 2
        if cdfs[mid] >= p:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class SourceDelayStats:
    mean: float
    variance: float
    quantiles: dict

    @property
    def std_dev(self) -> float:
        return math.sqrt(self.variance)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "std_dev": self.std_dev,
                "quantiles": dict(self.quantiles)}


def delay_stats(rep: PhaseTypeRep, probs=(0.5, 0.9, 0.99)) -> SourceDelayStats:
    m1, m2 = second_factorial_terms(rep)
    return SourceDelayStats(
        mean=m1,
        variance=max(m2 - m1 * m1, 0.0),
        quantiles={f"p{round(p * 100)}": quantile(rep, p) for p in probs},
    )
