"""Stationary and post-insertion distributions of the local queue."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .params import NetworkConfig, contact_probabilities, validate_config
from .qbd import StateIndexing, build_blocks, chain_matrix

CLIP_TOL = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class StateDistribution:
    values: np.ndarray
    kind: str  # "stationary" or "conditional"
    M: int
    f: int

    @property
    def indexing(self) -> StateIndexing:
        return StateIndexing(self.M, self.f)

    def level(self, l: int) -> np.ndarray:
        if l == 0:
            return self.values[:1]
        return self.values[1 + (l - 1) * self.f: 1 + l * self.f]

    def level_mass(self) -> np.ndarray:
        return np.array([self.level(l).sum() for l in range(self.M + 1)])


def _clean(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=float).copy()
    if v.min() < -CLIP_TOL * max(1.0, np.abs(v).max()):
        raise SolverError(f"negative probability {v.min():.3e} in state distribution")
    v[v < 0] = 0.0
    total = v.sum()
    if not total > 0:
        raise SolverError("state distribution has zero mass")
    return v / total


def _left_solve(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Return x @ inv(A) without forming the inverse."""
    return np.linalg.solve(A.T, x.T).T


def solve_pi_omega(cfg: NetworkConfig) -> StateDistribution:
    """Stationary distribution of the local queue by block elimination.

    M = 1 and M = 2 are solved directly from their balance equations; M ≥ 3
    uses the matrix-geometric form with rate matrices R (interior levels)
    and R_M (top level).
    """
    validate_config(cfg)
    M, f = cfg.M, cfg.f
    blk = build_blocks("P0", cfg, contact_probabilities(cfg))
    I = np.eye(f)
    # π0 = 1 replaces the redundant balance equation of level 0; normalized at the end.
    pi0 = np.ones((1, 1))
    if M == 1:
        pi1 = _left_solve(pi0 @ blk.B0, I - blk.AM)
        levels = [pi1]
    elif M == 2:
        # π2 = π1 A0 (I - AM)^-1, substituted into the level-1 equation
        R_top = _left_solve(blk.A0, I - blk.AM)
        pi1 = _left_solve(pi0 @ blk.B0, I - blk.A1 - R_top @ blk.A2)
        levels = [pi1, pi1 @ R_top]
    else:
        # A2 has rank one (column c times unit_row), so G = 1·unit_row
        G = np.zeros((f, f))
        G[:, 0] = 1.0
        R = _left_solve(blk.A0, I - blk.A1 - blk.A0 @ G)
        R_M = _left_solve(blk.A0, I - blk.AM)
        pi1 = _left_solve(pi0 @ blk.B0, I - blk.A1 - R @ blk.A2)
        levels = [pi1]
        for _ in range(2, M):
            levels.append(levels[-1] @ R)
        levels.append(levels[-1] @ R_M)
    vec = np.concatenate([pi0.ravel()] + [lv.ravel() for lv in levels])
    return StateDistribution(_clean(vec), "stationary", M, f)


def solve_pi_omega_dense(cfg: NetworkConfig) -> StateDistribution:
    """Stationary distribution from the assembled transition matrix.

    Solves ``π (P0 - I) = 0`` with the first equation replaced by ``Σπ = 1``
    (LU with partial pivoting).
    """
    validate_config(cfg)
    P = chain_matrix("P0", cfg)
    A = (P - np.eye(P.shape[0])).T
    A[0, :] = 1.0
    b = np.zeros(P.shape[0])
    b[0] = 1.0
    vec = np.linalg.solve(A, b)
    return StateDistribution(_clean(vec), "stationary", cfg.M, cfg.f)


def fixed_point_residual(cfg: NetworkConfig, pi: StateDistribution) -> float:
    P = chain_matrix("P0", cfg)
    return float(np.abs(pi.values @ P - pi.values).max())


def acceptance_probability(cfg: NetworkConfig, pi_omega: StateDistribution) -> float:
    """Long-run per-slot probability that a generated packet is accepted."""
    P1 = chain_matrix("P1", cfg)
    return float(cfg.lam * (pi_omega.values @ P1).sum())


def conditional_distribution(cfg: NetworkConfig,
                             pi_omega: StateDistribution | None = None) -> StateDistribution:
    """Queue-state distribution just after a new packet has been inserted."""
    if cfg.lam <= 0:
        raise ValueError("λ > 0 required for conditional distribution")
    if pi_omega is None:
        pi_omega = solve_pi_omega(cfg)
    probs = contact_probabilities(cfg)
    P2 = chain_matrix("P2", cfg, probs)
    num = pi_omega.values @ P2
    den = acceptance_probability(cfg, pi_omega)
    vec = num / den
    vec[0] = 0.0
    return StateDistribution(_clean(vec), "conditional", cfg.M, cfg.f)


def dump_csv(dist: StateDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "probability"])
        for lab, v in zip(dist.indexing.labels(), dist.values):
            w.writerow([lab, repr(float(v))])
