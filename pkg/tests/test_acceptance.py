"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict (shown in the terminal summary)
and then asserts it, so a failing criterion also fails the run.

    pytest tests/test_acceptance.py -v
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from sourcedelay.compare import compare, sweep
from sourcedelay.delay import (adaptive_horizon, mean, phase_type, pmf_array,
                               second_factorial_terms, variance)
from sourcedelay.io import write_csv, write_json
from sourcedelay.params import NetworkConfig, contact_probabilities
from sourcedelay.simulator import run, run_until, single_slot_event_frequencies
from sourcedelay.steady import acceptance_probability, solve_pi_omega, solve_pi_omega_dense

BASE = NetworkConfig(n=100, m=8, M=7, f=2, q=0.4, lam=0.001)
LAM_GRID = [round(0.0005 * k, 4) for k in range(1, 11)]
Q_GRID = [round(0.1 * k, 1) for k in range(1, 10)]


def test_c01_contact_probabilities_monte_carlo(verdict):
    cfg = NetworkConfig(n=100, m=8, q=0.4, delta=0.0)
    pr = contact_probabilities(cfg)
    t0 = time.perf_counter()
    fr = single_slot_event_frequencies(cfg, slots=1_000_000, seed=0)
    elapsed = time.perf_counter() - t0
    z0 = (fr.freq_p0 - pr.p0) / fr.se_p0
    z1 = (fr.freq_p1 - pr.p1) / fr.se_p1
    ok = abs(z0) <= 3 and abs(z1) <= 3 and elapsed <= 60
    assert verdict("C1 contact probabilities by Monte Carlo", ok,
                   f"z(p0)={z0:+.2f} z(p1)={z1:+.2f} over {fr.slots} slots in {elapsed:.1f}s")


def test_c02_exact_rationals(verdict):
    pr = contact_probabilities(NetworkConfig(n=2, m=4, q=0.5, delta=0.0))
    e0 = abs(pr.p0 - Fraction(17, 512))
    e1 = abs(pr.p1 - Fraction(7, 512))
    ok = e0 <= 1e-15 and e1 <= 1e-15
    assert verdict("C2 exact rationals", ok,
                   f"|p0-17/512|={float(e0):.1e} |p1-7/512|={float(e1):.1e}")


def test_c03_solver_equivalence(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for M, f, lam, q in itertools.product([3, 5, 7], [1, 2, 3], [0.001, 0.005], [0.2, 0.6]):
        cfg = NetworkConfig(n=100, m=8, delta=0.0, M=M, f=f, lam=lam, q=q)
        diff = np.abs(solve_pi_omega(cfg).values - solve_pi_omega_dense(cfg).values).max()
        worst = max(worst, float(diff))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed <= 10
    assert verdict("C3 matrix-geometric vs dense solver", ok,
                   f"max-abs diff {worst:.2e} over 36 configs in {elapsed:.2f}s")


def test_c04_phase_type_consistency(verdict):
    rep = phase_type(BASE)
    u_max = adaptive_horizon(rep)
    p = pmf_array(rep, u_max)
    u = np.arange(1, u_max + 1, dtype=float)
    s_mean = float(np.sum(u * p))
    s_var = float(np.sum(u * u * p)) - s_mean ** 2
    r_mean = abs(mean(rep) - s_mean) / s_mean
    r_var = abs(variance(rep) - s_var) / s_var
    mass = float(p.sum())
    ok = r_mean <= 1e-6 and r_var <= 1e-6 and mass >= 1 - 1e-9
    assert verdict("C4 phase-type moments vs truncated series", ok,
                   f"rel err mean {r_mean:.1e}, variance {r_var:.1e}, "
                   f"mass {mass:.12f} at u={u_max}")


def test_c05_geometric_specialization(verdict):
    # relative errors: one ulp of a variance near 434 is already 5.7e-14
    worst_mean = worst_var = 0.0
    for cfg in (NetworkConfig(n=2, m=4, q=0.5, lam=0.01, M=1, f=1),
                NetworkConfig(n=57, m=9, q=0.37, lam=0.02, M=1, f=1)):
        pr = contact_probabilities(cfg)
        rep = phase_type(cfg)
        s = pr.p0 + pr.p1
        worst_mean = max(worst_mean, abs(mean(rep) * s - 1))
        worst_var = max(worst_var, abs(variance(rep) * s ** 2 / pr.p2 - 1))
    ok = worst_mean <= 1e-14 and worst_var <= 1e-14
    assert verdict("C5 geometric specialization", ok,
                   f"relative err mean {worst_mean:.1e}, variance {worst_var:.1e}")


def _baseline_run(cfg, seed=0):
    rep = phase_type(cfg)
    warmup = math.ceil(20 * mean(rep))
    rate = acceptance_probability(cfg, solve_pi_omega(cfg))
    t0 = time.perf_counter()
    emp = run_until(cfg, min_samples=10_000, warmup=warmup, seed=seed, acceptance_rate=rate)
    elapsed = time.perf_counter() - t0
    return compare(rep, emp, threshold=0.02), elapsed


@pytest.mark.slow
@pytest.mark.parametrize("n", [100, 200])
def test_c06_base_reproduction(verdict, n):
    res, elapsed = _baseline_run(BASE.replace(n=n))
    ok = res.samples >= 10_000 and res.ks_distance <= 0.02 and elapsed <= 300
    assert verdict(f"C6 simulated vs analytic CDF (n={n})", ok,
                   f"KS={res.ks_distance:.4f} samples={res.samples} "
                   f"mean {res.empirical_mean:.2f} vs {res.analytic_mean:.2f} in {elapsed:.1f}s")


def _sigma_argmax(delta):
    base = NetworkConfig(n=200, m=16, q=0.6, f=3, delta=delta)
    rows = sweep(base, {"M": [3, 5, 7], "lam": LAM_GRID}, workers=1)
    peaks = {}
    for M in (3, 5, 7):
        sub = [r for r in rows if r["M"] == M]
        peaks[M] = max(sub, key=lambda r: r["std_dev"])["lam"]
    return peaks


def test_c07_sigma_peak_location(verdict):
    t0 = time.perf_counter()
    peaks = _sigma_argmax(0.0)
    elapsed = time.perf_counter() - t0
    ok = set(peaks.values()) == {0.0025} and elapsed <= 10
    detail = f"Δ=0 argmax λ by M {peaks} in {elapsed:.2f}s"
    if not ok:
        # fallback re-run prescribed when Δ = 0 misses the target
        alt = {d: _sigma_argmax(d) for d in (0.0, 1.0)}
        detail += "; re-run over Δ: " + ", ".join(f"Δ={d:g} {p}" for d, p in alt.items())
    assert verdict("C7 σ_U peak at λ=0.0025 for M in {3,5,7}", ok, detail)


def test_c08_monotone_in_q(verdict):
    base = NetworkConfig(n=300, m=16, M=7, lam=0.002, delta=0.0)
    rows = sweep(base, {"f": [1, 2, 4], "q": Q_GRID}, workers=1)
    bad = []
    for f in (1, 2, 4):
        sub = [r for r in rows if r["f"] == f]
        for key in ("mean", "std_dev"):
            vals = [r[key] for r in sub]
            if not all(b < a for a, b in zip(vals, vals[1:])):
                bad.append((f, key))
    means = {f: round([r for r in rows if r["f"] == f][0]["mean"], 1) for f in (1, 2, 4)}
    assert verdict("C8 mean and σ_U strictly decrease in q", not bad,
                   f"violations {bad or 'none'}; mean at q=0.1 by f {means}")


@pytest.mark.slow
def test_c09_queue_occupancy(verdict):
    cfg = NetworkConfig(n=20, m=4, M=3, f=2, q=0.5, lam=0.01, delta=0.0)
    pi = solve_pi_omega(cfg).values
    warmup = 5000
    emp = run(cfg, slots=warmup + 1_000_000, warmup=warmup, seed=0, track_occupancy=True)
    occ = emp.occupancy / emp.occupancy.sum()
    tv = 0.5 * float(np.abs(occ - pi).sum())
    ok = tv <= 0.01 and emp.occupancy.sum() == 1_000_000
    assert verdict("C9 simulated queue occupancy vs stationary law", ok,
                   f"TV={tv:.4f} over {int(emp.occupancy.sum())} post-warmup slots")


def test_c10_determinism(verdict, tmp_path):
    cfg = BASE.replace(n=50)
    blobs = []
    for k in range(2):
        emp = run(cfg, slots=100_000, warmup=2000, seed=42)
        out = tmp_path / f"r{k}"
        out.mkdir()
        write_csv(out / "samples.csv", ["delay"], ((int(s),) for s in emp.samples), cfg)
        write_json(out / "summary.json", emp.summary())
        blobs.append(b"".join((out / name).read_bytes() for name in ("samples.csv", "summary.json")))
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 100
    assert verdict("C10 byte-identical reruns", ok,
                   f"{len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}")


def test_moment_helpers_agree():
    # sanity for the sweep path used by C7 and C8
    rep = phase_type(BASE)
    m1, m2 = second_factorial_terms(rep)
    assert m1 == pytest.approx(mean(rep)) and m2 - m1 ** 2 == pytest.approx(variance(rep))
