"""Acceptance checks.

Each check reproduces one guarantee or lower-bound construction numerically
and returns a :class:`CriterionResult`.  ``python -m stochsched verify`` and
``tests/test_acceptance.py`` both run them.  All seeds are fixed here.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .balls_bins import expected_max_load_exact, expected_max_load_mc, majorizes
from .distributions import Exponential, TwoPoint, Uniform
from .estimates import EstimateReport
from .harness import estimate_mech_makespan, ratio, theoretical_bounds
from .instances import (
    bernoulli_p,
    gen_bernoulli_iid,
    gen_dominant_machine,
    gen_unit_and_small,
    make_iid,
    sample_matrices,
    sample_matrix,
)
from .mechanisms import (
    TieBreak,
    balance_expensive_allocate,
    bounded_overload_allocate,
    bounded_overload_cap,
    capacitated_min_cost_assignment,
    makespan,
    round_robin_allocate,
    total_cost,
    vcg_allocate,
    vcg_expected_makespan_exact,
)
from .optimal_oracle import opt_exhaustive, opt_identical_dp, solve_opt
from .order_stats import (
    expect_max_of_mins,
    first_order_stat_mhr_check,
    moment_inequality_check,
    monte_carlo_order_stat,
    stretch_factor,
)
from .rng import RandomStream

SEED = 20161
K_SE = 3.0


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    limit: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.1f}s / {self.limit:.0f}s)"


def _stream(number: int) -> RandomStream:
    return RandomStream(SEED).child(number)


def exhaustive_capacitated_cost(costs, cap: int) -> float:
    """Brute-force optimum of the capacitated assignment problem."""
    costs = np.asarray(costs, dtype=float)
    n, m = costs.shape
    best = math.inf
    for a in itertools.product(range(n), repeat=m):
        if max(np.bincount(a, minlength=n)) <= cap:
            best = min(best, math.fsum(costs[i, j] for j, i in enumerate(a)))
    return best


def check_closed_forms():
    rng = _stream(1)
    sizes = (1, 2, 5, 10, 50)
    worst, fails = 0.0, []
    for k, d in enumerate((Uniform(0.0, 1.0), Exponential(1.0))):
        for idx, (n, m) in enumerate(itertools.product(sizes, sizes)):
            est = monte_carlo_order_stat(d, n, m, 10**6, rng.child(100 * k + idx))
            exact = expect_max_of_mins(d, n, m)
            z = abs(est.mean - exact) / est.std_error
            worst = max(worst, z)
            if z > K_SE:
                fails.append(f"{d.label()} n={n} m={m} z={z:.2f}")
    return not fails, f"50 cells, worst |z|={worst:.2f}" + (f"; failing {fails}" if fails else "")


def check_stretch_lower_bound():
    ns = np.arange(2, 10**4 + 1)
    bad, parts = [], []
    for d in (Uniform(0.0, 1.0), Exponential(1.0), Exponential(2.5)):
        margin = min(stretch_factor(d, int(n)) - math.log(n) for n in ns)
        if margin < 0:
            bad.append(d.label())
        parts.append(f"{d.label()} min(k(n) - ln n)={margin:.4f}")
    return not bad, "n=2..10^4: " + "; ".join(parts)


def check_thm37():
    inst = make_iid(4, 16, Uniform(0.0, 1.0))
    rep = ratio(inst, {"mechanism": "vcg"}, 10**5, SEED + 3)
    bound = 1 + math.sqrt(2)
    ok = rep.ratio <= bound + K_SE * rep.ratio_se
    return ok, f"ratio={rep.ratio:.4f} (se {rep.ratio_se:.4f}, OPT by {rep.opt_method}) vs 1+sqrt2={bound:.4f}"


def _ratio_under_four(n, m, seed):
    parts, ok = [], True
    for d in (Uniform(0.0, 1.0), Exponential(1.0)):
        rep = ratio(make_iid(n, m, d), {"mechanism": "vcg"}, 10**5, seed, opt_method="lower_bound")
        ok &= rep.ratio <= 4.0 + K_SE * rep.ratio_se
        parts.append(f"{d.label()} ratio={rep.ratio:.4f} (se {rep.ratio_se:.4f})")
    return ok, parts


def check_cor34():
    n, m = 10, 24
    assert m >= n * math.log(n)
    ok, parts = _ratio_under_four(n, m, SEED + 4)
    return ok, "; ".join(parts)


def check_cor36():
    n, m = 10, 10
    ok, parts = _ratio_under_four(n, m, SEED + 5)
    for d in (Uniform(0.0, 1.0), Exponential(1.0)):
        b = dict((k, v) for k, v, _ in theoretical_bounds(n, m, {"stretch": stretch_factor(d, n)}))
        ok &= b["thm35_ratio"] <= 4.0
        parts.append(f"{d.label()} 4ln n/k(n)={b['thm35_ratio']:.4f}")
    return ok, "; ".join(parts)


def check_unit_tasks_balls_bins():
    rng = _stream(6)
    ok, parts, ratios = True, [], {}
    for n in (2, 3, 4):
        t = sample_matrix(gen_unit_and_small(n, n), rng)
        r = vcg_expected_makespan_exact(t) / opt_identical_dp(t[0], n)
        bb = expected_max_load_exact(np.ones(n), n)
        ok &= r == bb
        ratios[n] = r
        parts.append(f"n={n}: {r:.6f}=={bb:.6f}")
    ok &= ratios[2] == 1.5 and ratios[3] == 17 / 9
    for n in (16, 64, 256):
        inst = gen_unit_and_small(n, n)
        vcg = estimate_mech_makespan(inst, {"mechanism": "vcg"}, 10**4, SEED + 60 + n)
        bb = expected_max_load_mc(np.ones(n), n, 10**4, rng.child(n))
        se = math.hypot(vcg.std_error, bb.std_error)
        ok &= abs(vcg.mean - bb.mean) <= K_SE * se
        ratios[n] = vcg.mean  # OPT is exactly 1
        parts.append(f"n={n}: vcg {vcg.mean:.4f} vs balls {bb.mean:.4f} (se {se:.4f})")
    seq = [ratios[n] for n in (4, 16, 64, 256)]
    ok &= all(b > a for a, b in zip(seq, seq[1:]))
    parts.append("increasing " + " < ".join(f"{r:.3f}" for r in seq))
    return ok, "; ".join(parts)


def check_bernoulli_lower_bound():
    rng = _stream(7)
    ok = bernoulli_p(2, 4) == 0.5 and gen_bernoulli_iid(2, 4).dists[0].p_hi == 0.5
    inst = gen_bernoulli_iid(2, 4)
    mats = sample_matrices(inst, rng.child(0), 10**4)
    counts = (mats.min(axis=1) == 1).sum(axis=1)
    m_est = EstimateReport.from_samples(counts, SEED)
    ok &= m_est.within(1.0, K_SE)
    parts = [f"p=0.5, E[M]={m_est.mean:.4f} (se {m_est.std_error:.4f})"]
    for n in (2, 4, 8):
        for m in (n, 4 * n):
            mats = sample_matrices(gen_bernoulli_iid(n, m), rng.child(n * 100 + m), 10**4)
            spans = [makespan(t, balance_expensive_allocate(t)) for t in mats]
            est = EstimateReport.from_samples(spans, SEED)
            bound = 4 + m / (n * math.exp(n))
            ok &= est.mean <= bound + K_SE * est.std_error
            parts.append(f"n={n},m={m}: {est.mean:.3f}<= {bound:.3f}")
    return ok, "; ".join(parts)


def check_dominant_machine():
    eps = 1e-6
    ok, parts = True, []
    rng = _stream(8)
    for n in (2, 5, 10):
        m = 4 * n
        t = sample_matrix(gen_dominant_machine(n, m, eps), rng)
        vcg = makespan(t, vcg_allocate(t, TieBreak.UNIFORM_RANDOM, rng))
        bal = makespan(t, round_robin_allocate(t))
        r = vcg / bal
        ok &= vcg == m * (1 - eps) and bal == m / n and r == n * (1 - eps)
        parts.append(f"n={n}: vcg={vcg!r} balanced={bal!r} ratio={r!r}")
    return ok, "; ".join(parts)


def check_bounded_overload_tightness():
    ok, parts = True, []
    for n, m, c in ((5, 5, 1), (5, 10, 2), (10, 10, 1)):
        t = sample_matrix(gen_unit_and_small(n, m), _stream(9))
        a = bounded_overload_allocate(t, c, TieBreak.FIXED_ORDER)
        cap = bounded_overload_cap(n, m, c)
        span = makespan(t, a)
        opt = solve_opt(t).value
        need = min(math.floor(c * m / n), n - 1)
        ok &= span >= need and opt == 1.0 and np.bincount(a, minlength=n).max() <= cap
        parts.append(f"(n={n},m={m},c={c}): makespan {span:g} >= {need}, OPT={opt:g}")
    return ok, "; ".join(parts)


def _random_majorizing_pair(rng):
    mp = int(rng.integers(1, 9))
    wp = [int(x) for x in rng.integers(0, 6, mp)]
    w = sorted(wp, reverse=True)
    for _ in range(int(rng.integers(0, 5))):
        if len(w) > 1 and rng.random() < 0.5:
            i, j = rng.choice(len(w), 2, replace=False)
            w[i] += w[j]
            del w[j]
        else:
            w.sort(reverse=True)
            i, j = sorted(rng.choice(len(w), 2, replace=False)) if len(w) > 1 else (0, 0)
            if i != j and w[j] > 0:
                k = int(rng.integers(1, w[j] + 1))
                w[i] += k
                w[j] -= k
    return w, wp


def check_majorization():
    rng = _stream(10)
    bad, built = [], 0
    for _ in range(200):
        w, wp = _random_majorizing_pair(rng)
        n = int(rng.integers(1, 5))
        if not majorizes(w, wp):
            bad.append(f"generator produced non-majorizing {w} / {wp}")
            continue
        built += 1
        if not expected_max_load_exact(w, n) >= expected_max_load_exact(wp, n):
            bad.append(f"w={w} w'={wp} n={n}")
    return not bad and built == 200, f"{built} pairs, {len(bad)} violations" + (f": {bad[:3]}" if bad else "")


def check_oracle_equivalence():
    rng = _stream(11)
    bad_flow = 0
    for _ in range(500):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 8))
        costs = rng.integers(0, 10, (n, m)).astype(float)
        cap = int(rng.integers(-(-m // n), m + 1))
        tb = TieBreak.FIXED_ORDER if rng.random() < 0.5 else TieBreak.UNIFORM_RANDOM
        a = capacitated_min_cost_assignment(costs, cap, tb, rng)
        if total_cost(costs, a) != exhaustive_capacitated_cost(costs, cap) or np.bincount(a, minlength=n).max() > cap:
            bad_flow += 1
    bad_dp = 0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 11))
        w = rng.integers(0, 21, m).astype(float)
        if opt_identical_dp(w, n) != opt_exhaustive(np.tile(w, (n, 1))):
            bad_dp += 1
    return bad_flow == 0 and bad_dp == 0, f"assignment mismatches {bad_flow}/500, identical-DP mismatches {bad_dp}/500"


def check_mhr_suite():
    rng = _stream(12)
    ok, parts = True, []
    for d in (Uniform(0.0, 1.0), Exponential(1.0)):
        for r in (2, 3):
            res = moment_inequality_check(d, r, 10**6, rng.child(10 * r + (1 if isinstance(d, Exponential) else 0)))
            ok &= res.holds
            parts.append(f"{d.label()} r={r}: {res.lhs:.4f}<={res.rhs:.4f}")
        for n in (2, 5, 10):
            ok &= first_order_stat_mhr_check(d, n)
    res = moment_inequality_check(TwoPoint(0.0, 1.0, 0.4), 2, 10**6, rng.child(99))
    ok &= not res.holds
    parts.append(f"two_point(0.4) r=2: {res.lhs:.4f} > {res.rhs:.4f} (fails as expected)")
    parts.append("min-of-n MHR for n in {2,5,10}")
    return ok, "; ".join(parts)


CRITERIA: list[tuple[int, str, float, Callable]] = [
    (1, "order-statistic closed forms vs Monte Carlo", 120, check_closed_forms),
    (2, "stretch factor >= ln n", 60, check_stretch_lower_bound),
    (3, "1+sqrt2 bound for m >= n^2", 300, check_thm37),
    (4, "ratio <= 4 for m >= n ln n", 300, check_cor34),
    (5, "ratio <= 4 for uniform/exponential, m <= n ln n", 300, check_cor36),
    (6, "unit tasks behave as balls in bins", 300, check_unit_tasks_balls_bins),
    (7, "Bernoulli instance structure", 120, check_bernoulli_lower_bound),
    (8, "dominant machine forces ratio n(1-eps)", 60, check_dominant_machine),
    (9, "bounded overload tightness", 60, check_bounded_overload_tightness),
    (10, "majorization orders expected max load", 120, check_majorization),
    (11, "assignment and identical-machine oracles agree with brute force", 300, check_oracle_equivalence),
    (12, "MHR moment and first-order-statistic properties", 120, check_mhr_suite),
]


def run_criterion(number: int) -> CriterionResult:
    for num, title, limit, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            ok, detail = fn()
            elapsed = time.perf_counter() - start
            if elapsed > limit:
                ok, detail = False, detail + f"; exceeded runtime limit {limit:.0f}s"
            return CriterionResult(num, title, bool(ok), detail, elapsed, limit)
    raise KeyError(f"no criterion {number}")


def run_all(numbers=None, echo=print) -> list[CriterionResult]:
    results = []
    for num, *_ in CRITERIA:
        if numbers and num not in numbers:
            continue
        res = run_criterion(num)
        if echo:
            echo(res.line())
        results.append(res)
    return results
