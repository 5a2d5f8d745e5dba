import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stochsched.distributions import Exponential, PointMass, Uniform
from stochsched.harness import estimate_expected_opt
from stochsched.instances import gen_unit_and_small, make_general, make_iid, sample_matrix
from stochsched.mechanisms import TieBreak, bounded_overload_allocate, makespan, vcg_allocate
from stochsched.optimal_oracle import (
    BudgetExceededError,
    expected_opt_lower_bound,
    opt_exhaustive,
    opt_exhaustive_batch,
    opt_identical_dp,
    opt_lower_bound_terms,
    solve_opt,
)
from stochsched.order_stats import beta, harmonic
from stochsched.rng import RandomStream


def test_exhaustive_examples():
    assert opt_exhaustive([[2, 1], [1, 2]]) == 1
    assert opt_exhaustive([[1, 2, 3]]) == 6
    assert opt_exhaustive(sample_matrix(gen_unit_and_small(3, 5), RandomStream(0))) == 1


def test_exhaustive_budget():
    with pytest.raises(BudgetExceededError, match="identical_dp"):
        opt_exhaustive(np.ones((4, 12)))


def test_identical_dp_examples():
    assert opt_identical_dp([1, 1, 0.5, 0.5], 2) == 1.5
    assert opt_identical_dp(np.ones(6), 6) == 1
    with pytest.raises(BudgetExceededError):
        opt_identical_dp(np.ones(25), 3)


def test_identical_dp_unit_and_small():
    for m in range(2, 25):
        for n in range(2, m + 1):
            t = sample_matrix(gen_unit_and_small(n, m), RandomStream(0))
            assert opt_identical_dp(t[0], n) == 1, (n, m)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), arrays(np.int64, st.integers(1, 9), elements=st.integers(0, 30)))
def test_identical_dp_matches_exhaustive(n, w):
    assert opt_identical_dp(w, n) == opt_exhaustive(np.tile(w, (n, 1)))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), arrays(np.float64, st.integers(1, 8), elements=st.floats(0, 1, allow_nan=False)))
def test_identical_dp_float_weights(n, w):
    assert opt_identical_dp(w, n) == pytest.approx(opt_exhaustive(np.tile(w, (n, 1))), rel=1e-12, abs=1e-300)


def test_batch_matches_single(rng):
    batch = rng.random((50, 3, 5))
    assert np.array_equal(opt_exhaustive_batch(batch), [opt_exhaustive(t) for t in batch])
    batch = rng.random((3, 2, 15))
    assert np.array_equal(opt_exhaustive_batch(batch), [opt_exhaustive(t) for t in batch])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**32))
def test_opt_dominates_mechanisms(n, extra, seed):
    rng = RandomStream(seed)
    t = rng.random((n, n + extra))
    opt = solve_opt(t).value
    assert opt <= makespan(t, vcg_allocate(t, TieBreak.UNIFORM_RANDOM, rng))
    assert opt <= makespan(t, bounded_overload_allocate(t, 1, TieBreak.UNIFORM_RANDOM, rng))
    assert opt >= t.min(axis=0).max()
    assert opt >= t.min(axis=0).sum() / n - 1e-12


def test_solve_opt_dispatch():
    assert solve_opt(np.tile([3.0, 1, 2], (2, 1))).method == "identical_dp"
    assert solve_opt([[1, 2], [2, 1]]).method == "exhaustive"


def test_lower_bound_examples():
    # max{1 - 4 B(4, 3/2), 2/3} with B(4, 3/2) = G(4) G(3/2) / G(11/2)
    assert 1 - 4 * beta(4, 1.5) == pytest.approx(1 - 4 * math.gamma(4) * math.gamma(1.5) / math.gamma(5.5))
    assert 1 - 4 * beta(4, 1.5) < 2 / 3
    assert expected_opt_lower_bound(make_iid(2, 4, Uniform(0, 1))) == pytest.approx(2 / 3)
    assert expected_opt_lower_bound(make_iid(2, 4, PointMass(1))) == 2
    for n0 in (2, 5, 9):
        assert expected_opt_lower_bound(make_iid(n0, n0, Exponential(1))) == pytest.approx(harmonic(n0) / n0)


def test_lower_bound_needs_machine_identical():
    inst = make_general([[Uniform(0, 1), Uniform(0, 1)], [Uniform(0, 2), Uniform(0, 1)]])
    with pytest.raises(ValueError):
        opt_lower_bound_terms(inst)


@pytest.mark.parametrize("inst", [make_iid(2, 4, Uniform(0, 1)), make_iid(3, 5, Exponential(2))])
def test_expected_opt_above_lower_bound(inst):
    exact = estimate_expected_opt(inst, 20000, 1, "exact_per_sample")
    assert exact.mean + 3 * exact.std_error >= expected_opt_lower_bound(inst)


def test_lower_bound_mc_path_matches_closed_form():
    # an iid law routed through the generic machine-identical sampler
    from stochsched.instances import make_machine_identical

    inst = make_machine_identical(3, [Uniform(0, 1)] * 6)
    high, avg = opt_lower_bound_terms(inst, 10**5, RandomStream(2))
    closed_high, closed_avg = opt_lower_bound_terms(make_iid(3, 6, Uniform(0, 1)))
    assert high.within(closed_high.mean) and avg.within(closed_avg.mean)
