import json
import math

import numpy as np
import pytest

from stochsched.distributions import Exponential, PointMass, Uniform
from stochsched.harness import (
    CSV_COLUMNS,
    ConfigError,
    estimate_expected_opt,
    estimate_mech_makespan,
    expand_cells,
    ratio,
    rows_to_csv,
    rows_to_json,
    sweep,
    theoretical_bounds,
)
from stochsched.instances import gen_dominant_machine, gen_unit_and_small, make_iid
from stochsched.order_stats import harmonic

VCG = {"mechanism": "vcg"}


def test_estimate_examples():
    est = estimate_mech_makespan(make_iid(1, 3, PointMass(1)), VCG, 100, 0)
    assert est.mean == 3 and est.std_error == 0
    assert estimate_mech_makespan(make_iid(2, 2, PointMass(1)), VCG, 10**6, 1).within(1.5)
    est = estimate_mech_makespan(gen_dominant_machine(2, 4, 0.1), VCG, 1000, 2)
    assert est.mean == pytest.approx(3.6) and est.std_error == 0


def test_expected_opt_examples():
    est = estimate_expected_opt(gen_unit_and_small(3, 5), 100, 0, "exact_per_sample")
    assert est.mean == 1 and est.std_error == 0
    assert estimate_expected_opt(make_iid(2, 4, PointMass(1)), 100, 0, "exact_per_sample").mean == 2
    assert estimate_expected_opt(make_iid(2, 4, Uniform(0, 1)), 100, 0, "lower_bound").mean == pytest.approx(2 / 3)
    with pytest.raises(ValueError, match="lower_bound"):
        estimate_expected_opt(make_iid(5, 12, Uniform(0, 1)), 10, 0, "exact_per_sample")


def test_ratio_examples():
    rep = ratio(gen_dominant_machine(2, 4, 0.1), VCG, 1000, 0)
    assert rep.ratio == pytest.approx(1.8)
    rep = ratio(make_iid(2, 2, PointMass(1)), VCG, 10**5, 0)
    assert abs(rep.ratio - 1.5) <= 3 * rep.ratio_se
    rep = ratio(make_iid(4, 16, Uniform(0, 1)), VCG, 10**5, 0)
    assert rep.ratio <= 1 + math.sqrt(2)
    names = {b.name for b in rep.bound_checks}
    assert {"thm37_ratio", "eq3_makespan_ub"} <= names and all(b.satisfied for b in rep.bound_checks)


def test_theoretical_bound_formulas():
    b = dict((k, v) for k, v, _ in theoretical_bounds(10, 100))
    assert b["thm37_ratio"] == pytest.approx(2.41421, abs=1e-5)
    b = dict((k, v) for k, v, _ in theoretical_bounds(10, 24))
    assert b["cor34_ratio"] == 4 and b["thm33_ratio"] == pytest.approx(3.9188, abs=1e-4)
    assert "thm37_ratio" not in b
    b = dict((k, v) for k, v, _ in theoretical_bounds(10, 10, {"stretch": harmonic(10)}))
    assert b["thm35_ratio"] == pytest.approx(3.1446, abs=1e-4) and b["thm35_ratio"] <= 4
    assert "cor34_ratio" not in b
    assert theoretical_bounds(3, 3, {"continuous_mhr": False}) == []


@pytest.mark.parametrize(
    "inst", [make_iid(3, 6, Uniform(0, 1)), make_iid(4, 4, Exponential(2)), make_iid(5, 40, Uniform(1, 2))]
)
def test_eq3_upper_bounds_vcg(inst):
    rep = ratio(inst, VCG, 20000, 7, "lower_bound")
    eq3 = [b for b in rep.bound_checks if b.name == "eq3_makespan_ub"][0]
    assert rep.mech_estimate.mean <= eq3.value + 3 * rep.mech_estimate.std_error
    assert eq3.satisfied


@pytest.mark.parametrize("inst", [make_iid(2, 4, Uniform(0, 1)), make_iid(3, 5, Exponential(1))])
def test_lower_bound_ratio_dominates_exact(inst):
    lb = ratio(inst, VCG, 20000, 3, "lower_bound")
    ex = ratio(inst, VCG, 20000, 3, "exact_per_sample")
    assert lb.mech_estimate == ex.mech_estimate
    assert lb.ratio >= ex.ratio


def test_nonvcg_mechanisms_run():
    inst = make_iid(3, 6, Uniform(0, 1))
    bo = ratio(inst, {"mechanism": "bounded_overload", "c": 1}, 500, 0)
    sv = ratio(inst, {"mechanism": "sieve_bo", "c": 2, "beta": 0.5, "delta": 0.34}, 500, 0)
    assert bo.ratio >= 1 - 1e-12 and sv.ratio >= 1 - 1e-12
    assert bo.bound_checks == [] and bo.opt_method == "exact_per_sample"


GRID = {
    "seed": 5,
    "trials": 2000,
    "grid": {"n": [4, 8, 16], "m": ["n"], "instances": [{"family": "unit_and_small"}], "mechanisms": [VCG]},
}


def test_sweep_unit_and_small_growth():
    rows = sweep(GRID)
    assert [r["n"] for r in rows] == [4, 8, 16]
    ratios = [r["ratio"] for r in rows]
    assert ratios == sorted(ratios) and len(set(ratios)) == 3
    assert all(r["error"] == "" for r in rows)


def test_sweep_empty_and_error_rows():
    assert sweep({}) == [] and rows_to_csv([]).strip() == ",".join(CSV_COLUMNS)
    config = {
        "trials": 200,
        "cells": [
            {"n": 5, "m": 3, "instance": {"family": "unit_and_small"}},
            {"n": 2, "m": 3, "instance": {"family": "iid", "dist": {"kind": "uniform"}}},
            {"n": 2, "m": 3, "instance": {"family": "nonsense"}},
        ],
    }
    rows = sweep(config)
    assert "m >= n" in rows[0]["error"] and rows[1]["error"] == "" and "nonsense" in rows[2]["error"]
    assert rows[1]["ratio"] >= 1


def test_sweep_bad_grid():
    with pytest.raises(ConfigError):
        expand_cells({"grid": {"n": [2]}})
    with pytest.raises(ConfigError):
        expand_cells([1, 2])


def test_sweep_deterministic_and_parallel_safe():
    config = dict(GRID, cells=[{"n": 3, "m": 5, "instance": {"family": "iid", "dist": {"kind": "exponential"}}}])
    a = rows_to_csv(sweep(config))
    assert a == rows_to_csv(sweep(config))
    assert a == rows_to_csv(sweep(config, workers=2))


def test_json_rows():
    rows = sweep({"trials": 500, "cells": [{"n": 2, "m": 4, "instance": {"family": "iid", "dist": {"kind": "uniform"}}}]})
    rec = json.loads(rows_to_json(rows))[0]
    assert rec["n"] == 2 and {b["name"] for b in rec["bound_checks"]} >= {"thm33_ratio", "cor34_ratio"}
    assert all(isinstance(b["satisfied"], bool) for b in rec["bound_checks"])
