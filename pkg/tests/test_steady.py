import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sourcedelay.params import NetworkConfig, contact_probabilities
from sourcedelay.qbd import chain_matrix
from sourcedelay.steady import (SolverError, _clean, acceptance_probability,
                                conditional_distribution, dump_csv, fixed_point_residual,
                                solve_pi_omega, solve_pi_omega_dense)

BASE = NetworkConfig(n=100, m=8, M=7, f=2, q=0.4, lam=0.001)

configs = st.builds(
    NetworkConfig,
    n=st.integers(2, 400),
    m=st.integers(4, 16),
    q=st.floats(0.05, 0.95),
    lam=st.floats(1e-4, 0.2),
    f=st.integers(1, 4),
    M=st.integers(1, 8),
)


@pytest.mark.parametrize("M, f", [(1, 1), (2, 3), (3, 2), (7, 3)])
@pytest.mark.parametrize("solver", [solve_pi_omega, solve_pi_omega_dense])
def test_no_traffic_means_empty_queue(solver, M, f):
    pi = solver(NetworkConfig(n=50, m=8, M=M, f=f, lam=0.0))
    np.testing.assert_array_equal(pi.values, np.eye(1 + M * f)[0])


def test_single_state_balance():
    cfg = NetworkConfig(n=2, m=4, q=0.5, lam=0.01, M=1, f=1)
    pr = contact_probabilities(cfg)
    pi = solve_pi_omega(cfg).values
    ratio = cfg.lam / ((1 - cfg.lam) * (pr.p0 + pr.p1))
    assert pi[1] / pi[0] == pytest.approx(ratio, rel=1e-12)
    np.testing.assert_allclose(pi, solve_pi_omega_dense(cfg).values, atol=1e-14)


def test_baseline_matrix_geometric_matches_dense():
    a = solve_pi_omega(BASE).values
    b = solve_pi_omega_dense(BASE).values
    assert np.abs(a - b).max() <= 1e-10


def test_dense_solution_is_a_fixed_point():
    pi = solve_pi_omega_dense(BASE)
    assert fixed_point_residual(BASE, pi) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_m2_random_config_solvers_agree(seed):
    rng = np.random.default_rng(seed)
    cfg = NetworkConfig(n=int(rng.integers(2, 300)), m=int(rng.integers(4, 17)),
                        q=float(rng.uniform(0.05, 0.95)), lam=float(rng.uniform(1e-4, 0.1)),
                        f=2, M=2)
    np.testing.assert_allclose(solve_pi_omega(cfg).values, solve_pi_omega_dense(cfg).values,
                               atol=1e-10, rtol=0)


@pytest.mark.parametrize("M, f, lam, q", list(itertools.product(
    [3, 5, 7], [1, 2, 3], [0.001, 0.005], [0.2, 0.6])))
def test_solver_grid_agreement(M, f, lam, q):
    cfg = NetworkConfig(n=100, m=8, M=M, f=f, q=q, lam=lam)
    pi = solve_pi_omega(cfg)
    assert np.abs(pi.values - solve_pi_omega_dense(cfg).values).max() <= 1e-10
    assert fixed_point_residual(cfg, pi) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(configs)
def test_stationary_distribution_properties(cfg):
    pi = solve_pi_omega(cfg)
    assert pi.values.min() >= 0
    assert abs(pi.values.sum() - 1) <= 1e-10
    assert fixed_point_residual(cfg, pi) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(configs, st.floats(1e-4, 0.2))
def test_full_level_mass_grows_with_load(cfg, lam2):
    lo, hi = sorted((cfg.lam, lam2))
    a = solve_pi_omega(cfg.replace(lam=lo)).level_mass()[-1]
    b = solve_pi_omega(cfg.replace(lam=hi)).level_mass()[-1]
    assert a <= b + 1e-12


@settings(max_examples=100, deadline=None)
@given(configs)
def test_conditional_distribution_properties(cfg):
    cond = conditional_distribution(cfg)
    assert cond.kind == "conditional"
    assert cond.values[0] == 0
    assert cond.values.min() >= 0
    assert abs(cond.values.sum() - 1) <= 1e-10


def test_conditional_single_state():
    cond = conditional_distribution(NetworkConfig(n=2, m=4, q=0.5, lam=0.3, M=1, f=1))
    np.testing.assert_allclose(cond.values, [0.0, 1.0], atol=1e-15)


def test_conditional_requires_traffic():
    with pytest.raises(ValueError, match="λ > 0"):
        conditional_distribution(NetworkConfig(n=20, m=4, lam=0.0))


def test_conditional_matches_one_step_enumeration():
    # independent route: push π through P0 while splitting each transition into
    # "a packet was generated and kept" versus not, then normalise
    cfg = NetworkConfig(n=30, m=6, q=0.5, lam=0.05, M=3, f=2)
    pi = solve_pi_omega_dense(cfg).values
    P0_no_arrival = chain_matrix("P0", cfg.replace(lam=0.0))
    P0 = chain_matrix("P0", cfg)
    # with arrivals: P0 = (1-λ) P_noarr + λ P_arr  =>  P_arr = (P0 - (1-λ) P_noarr) / λ
    P_arr = (P0 - (1 - cfg.lam) * P0_no_arrival) / cfg.lam
    # an arrival that leaves the queue length unchanged at level M was dropped
    f, M = cfg.f, cfg.M
    top = slice(1 + (M - 1) * f, 1 + M * f)
    P_arr_kept = P_arr.copy()
    P_arr_kept[top, top] -= P0_no_arrival[top, top]  # no removal at level M: dropped
    num = pi @ P_arr_kept
    expected = num / num.sum()
    np.testing.assert_allclose(conditional_distribution(cfg).values, expected, atol=1e-12)


def test_acceptance_probability_bounds():
    pi = solve_pi_omega(BASE)
    pr = contact_probabilities(BASE)
    acc = acceptance_probability(BASE, pi)
    assert 0 < acc <= BASE.lam
    # a full queue accepts only if its head-of-line packet leaves in the same slot
    c = np.full(BASE.f, pr.p0)
    c[-1] += pr.p1
    expected = BASE.lam * (1 - pi.level_mass()[-1] + pi.level(BASE.M) @ c)
    assert acc == pytest.approx(expected, rel=1e-12)


def test_clean_clips_dust_and_rejects_real_negatives():
    np.testing.assert_allclose(_clean(np.array([0.5, 0.5, -1e-14])), [0.5, 0.5, 0.0])
    with pytest.raises(SolverError):
        _clean(np.array([0.5, 0.6, -0.1]))


def test_dump_csv(tmp_path):
    pi = solve_pi_omega(NetworkConfig(n=10, m=4, M=2, f=2, lam=0.1))
    path = tmp_path / "pi.csv"
    dump_csv(pi, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["state", "probability"]
    assert [r[0] for r in rows[1:]] == pi.indexing.labels()
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], pi.values)
