"""Analytic-versus-simulated comparison and analytic parameter sweeps."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import delay
from .params import NetworkConfig, validate_config
from .simulator import EmpiricalDelay, worker_count

SWEEP_AXES = ("lam", "M", "q", "f", "n", "m")
DEFAULT_KS_THRESHOLD = 0.02


def empirical_cdf(samples, u_max: int) -> np.ndarray:
    """``out[u] = fraction of samples ≤ u`` for u = 0..u_max."""
    s = np.sort(np.asarray(samples))
    if s.size == 0:
        raise ValueError("no samples")
    return np.searchsorted(s, np.arange(u_max + 1), side="right") / s.size


def ks_distance(F_a: np.ndarray, F_b: np.ndarray) -> float:
    """Sup-distance between two CDFs tabulated on the same integer support."""
    if F_a.shape != F_b.shape:
        raise ValueError("CDFs must share a support")
    return float(np.abs(F_a - F_b).max())


@dataclass(frozen=True)
class Comparison:
    ks_distance: float
    threshold: float
    analytic_mean: float
    analytic_variance: float
    empirical_mean: float
    empirical_variance: float
    samples: int
    support_max: int

    @property
    def passed(self) -> bool:
        return self.ks_distance <= self.threshold

    def as_dict(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "threshold": self.threshold,
            "passed": self.passed,
            "analytic_mean": self.analytic_mean,
            "analytic_variance": self.analytic_variance,
            "empirical_mean": self.empirical_mean,
            "empirical_variance": self.empirical_variance,
            "mean_delta": self.empirical_mean - self.analytic_mean,
            "variance_delta": self.empirical_variance - self.analytic_variance,
            "samples": self.samples,
            "support_max": self.support_max,
        }


def compare(rep: delay.PhaseTypeRep, emp: EmpiricalDelay,
            threshold: float = DEFAULT_KS_THRESHOLD) -> Comparison:
    s = emp.samples
    if s.size == 0:
        raise ValueError("no samples")
    u_max = max(int(s.max()), delay.adaptive_horizon(rep))
    F_ana = delay.cdf_array(rep, u_max)
    F_emp = empirical_cdf(s, u_max)
    m1, m2 = delay.second_factorial_terms(rep)
    return Comparison(
        ks_distance=ks_distance(F_ana, F_emp),
        threshold=threshold,
        analytic_mean=m1,
        analytic_variance=m2 - m1 * m1,
        empirical_mean=float(s.mean()),
        empirical_variance=float(s.var(ddof=1)) if s.size > 1 else float("nan"),
        samples=int(s.size),
        support_max=u_max,
    )


# -- sweeps -------------------------------------------------------------------

def _point(cfg: NetworkConfig) -> tuple[float, float]:
    rep = delay.phase_type(cfg)
    m1, m2 = delay.second_factorial_terms(rep)
    return m1, max(m2 - m1 * m1, 0.0)


def sweep(base: NetworkConfig, axes: dict, workers: int | None = None) -> list[dict]:
    """Analytic mean and variance over the Cartesian grid of ``axes``.

    ``axes`` maps one or two parameter names to value lists; rows come back in
    grid order (first axis slowest).
    """
    if not 1 <= len(axes) <= 2:
        raise ValueError("sweep needs one or two axes")
    for name in axes:
        if name not in SWEEP_AXES:
            raise ValueError(f"cannot sweep over {name!r}; choose from {SWEEP_AXES}")
    names = list(axes)
    grid = list(itertools.product(*(axes[k] for k in names)))
    cfgs = [validate_config(base.replace(**dict(zip(names, point)))) for point in grid]
    workers = min(workers or worker_count(), len(cfgs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point, cfgs))
    else:
        results = [_point(c) for c in cfgs]
    rows = []
    for point, (m1, var) in zip(grid, results):
        row = dict(zip(names, point))
        row.update(mean=m1, variance=var, std_dev=float(np.sqrt(var)))
        rows.append(row)
    return rows
