import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from stochsched.distributions import Exponential, PointMass, TwoPoint, Uniform
from stochsched.order_stats import (
    EULER_GAMMA,
    NoClosedFormError,
    beta,
    expect_max_of_mins,
    expect_min_of_n,
    expect_min_sq_of_n,
    first_order_stat_mhr_check,
    harmonic,
    moment_inequality_check,
    monte_carlo_order_stat,
    stretch_factor,
)
from stochsched.rng import RandomStream

from test_distributions import Lomax


def test_min_examples():
    assert expect_min_of_n(Uniform(0, 1), 4) == pytest.approx(0.2)
    assert expect_min_of_n(Exponential(2), 5) == pytest.approx(0.1)
    assert expect_min_of_n(PointMass(3), 7) == 3


def test_max_of_mins_examples():
    assert expect_max_of_mins(Exponential(1), 2, 3) == pytest.approx(11 / 12)
    assert expect_max_of_mins(Uniform(0, 1), 1, 1) == pytest.approx(0.5)
    assert expect_max_of_mins(Uniform(0, 1), 2, 2) == pytest.approx(7 / 15)


def test_stretch_examples():
    assert stretch_factor(Exponential(1), 3) == pytest.approx(11 / 6)
    assert stretch_factor(Exponential(7), 3) == pytest.approx(11 / 6)
    assert stretch_factor(Uniform(0, 1), 1) == pytest.approx(1)
    assert stretch_factor(Uniform(0, 1), 2) == pytest.approx(1.4)


def test_no_closed_form_errors():
    with pytest.raises(NoClosedFormError, match="monte_carlo_order_stat"):
        expect_min_of_n(TwoPoint(0, 1, 0.5), 2)
    with pytest.raises(NoClosedFormError):
        expect_max_of_mins(TwoPoint(0, 1, 0.5), 2, 2)


def _max_of_mins_by_quadrature(d, n, m):
    # E[Y] = int_0^inf P(Y > x) dx with P(Y <= x) = (1 - (1 - F)^n)^m
    lo, hi = d.support()
    f = lambda x: 1.0 - (1.0 - (1.0 - float(d.cdf(x))) ** n) ** m
    val, _ = integrate.quad(f, 0, hi, limit=200)
    return val


@pytest.mark.parametrize("d", [Uniform(0, 1), Uniform(1, 3), Exponential(1), Exponential(2.5)])
@pytest.mark.parametrize("n,m", [(1, 1), (2, 3), (5, 1), (4, 16), (10, 50)])
def test_closed_forms_match_quadrature(d, n, m):
    assert expect_max_of_mins(d, n, m) == pytest.approx(_max_of_mins_by_quadrature(d, n, m), rel=1e-8)
    assert expect_min_of_n(d, n) == pytest.approx(_max_of_mins_by_quadrature(d, n, 1), rel=1e-8)


@pytest.mark.parametrize("d", [Uniform(0, 1), Uniform(1, 3), Exponential(1.5)])
@pytest.mark.parametrize("n", [1, 3, 8])
def test_min_second_moment(d, n):
    lo, hi = d.support()
    val, _ = integrate.quad(lambda x: 2 * x * (1 - float(d.cdf(x))) ** n, 0, hi)
    assert expect_min_sq_of_n(d, n) == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("x,y", [(1, 2), (2, 1.5), (4, 1.25), (50, 1 + 1 / 7), (0.5, 0.5)])
def test_beta_against_quad(x, y):
    val, _ = integrate.quad(lambda t: 1.0, 0, 1, weight="alg", wvar=(x - 1, y - 1))
    assert beta(x, y) == pytest.approx(val, rel=1e-9)
    assert beta(2, 1.5) == pytest.approx(4 / 15)


@pytest.mark.parametrize("m", [1, 2, 10, 1000, 10**6, 10**6 + 1, 10**7])
def test_harmonic_bounds(m):
    h = harmonic(m)
    assert math.log(m) + EULER_GAMMA < h + 1e-15 <= math.log(m) + 1 + 1e-15


def test_harmonic_small_values_and_switch():
    assert harmonic(3) == pytest.approx(11 / 6)
    assert harmonic(10) == pytest.approx(7381 / 2520)
    # direct summation and the asymptotic expansion agree across the switch
    direct = math.fsum(1 / k for k in range(1, 10**6 + 2))
    assert harmonic(10**6 + 1) == pytest.approx(direct, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10**4))
def test_stretch_at_least_log_n(n):
    assert stretch_factor(Uniform(0, 1), n) >= math.log(n)
    assert stretch_factor(Exponential(1), n) >= math.log(n)


def test_stretch_needs_nondegenerate_law():
    with pytest.raises(ValueError):
        stretch_factor(PointMass(1), 3)


# -- Monte Carlo


def test_mc_uniform_min():
    est = monte_carlo_order_stat(Uniform(0, 1), 4, 1, 10**6, RandomStream(1))
    assert est.within(0.2)


def test_mc_point_mass_exact():
    est = monte_carlo_order_stat(PointMass(5), 3, 4, 1000, RandomStream(1))
    assert est.mean == 5 and est.std_error == 0


def test_mc_exponential_max_of_mins():
    est = monte_carlo_order_stat(Exponential(1), 2, 3, 10**6, RandomStream(2))
    assert est.within(11 / 12)


@pytest.mark.parametrize("d", [Uniform(0, 1), Exponential(2)])
def test_fast_path_agrees_with_generic(d):
    fast = monte_carlo_order_stat(d, 5, 7, 2 * 10**5, RandomStream(3), method="inverse")
    slow = monte_carlo_order_stat(d, 5, 7, 2 * 10**5, RandomStream(4), method="generic")
    assert abs(fast.mean - slow.mean) <= 3 * math.hypot(fast.std_error, slow.std_error)


def test_mc_discrete_generic():
    # min of two fair bits is 1 w.p. 1/4; max of 3 such mins is 1 w.p. 1 - (3/4)^3
    est = monte_carlo_order_stat(TwoPoint(0, 1, 0.5), 2, 3, 10**5, RandomStream(5))
    assert est.within(1 - 0.75**3)


def test_mc_deterministic():
    a = monte_carlo_order_stat(Uniform(0, 1), 3, 3, 1000, RandomStream(9))
    b = monte_carlo_order_stat(Uniform(0, 1), 3, 3, 1000, RandomStream(9))
    assert a == b


# -- MHR machinery


def test_moment_examples():
    r = moment_inequality_check(Exponential(1), 2, 10**6, RandomStream(1))
    assert r.lhs == pytest.approx(2, rel=0.02) and r.rhs == pytest.approx(2, rel=0.02) and r.holds
    r = moment_inequality_check(Uniform(0, 1), 2, 10**6, RandomStream(2))
    assert r.lhs == pytest.approx(1 / 3, rel=0.01) and r.rhs == pytest.approx(1 / 2, rel=0.01) and r.holds
    r = moment_inequality_check(TwoPoint(0, 1, 0.4), 2, 10**6, RandomStream(3))
    assert r.lhs == pytest.approx(0.4, rel=0.01) and r.rhs == pytest.approx(0.32, rel=0.01) and not r.holds


def test_first_order_stat_examples():
    assert first_order_stat_mhr_check(Uniform(0, 1), 3)
    assert first_order_stat_mhr_check(Exponential(2), 10)
    assert not first_order_stat_mhr_check(Lomax(), 4)
    with pytest.raises(ValueError):
        first_order_stat_mhr_check(TwoPoint(0, 1, 0.5), 2)
