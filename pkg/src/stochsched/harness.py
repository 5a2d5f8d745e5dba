"""Monte Carlo experiment runner.

Estimates expected mechanism and optimal makespans on an instance, forms
approximation ratios (ratio of means), attaches the theoretical guarantees
that apply to the instance, and runs grids of such cells.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import distributions as dists
from .balls_bins import aven_bound
from .distributions import is_mhr_numeric
from .estimates import EstimateReport
from .instances import (
    IID,
    SchedulingInstance,
    gen_bernoulli_iid,
    gen_dominant_machine,
    gen_unit_and_small,
    m_of_n,
    make_iid,
    make_machine_identical,
    sample_matrices,
    sample_matrix,
)
from .mechanisms import MechanismSpec, makespan, vcg_makespans_batch
from .optimal_oracle import (
    EXHAUSTIVE_BUDGET,
    BudgetExceededError,
    opt_exhaustive_batch,
    opt_lower_bound_terms,
    solve_opt,
)
from .order_stats import NoClosedFormError, expect_min_of_n, expect_min_sq_of_n, stretch_factor
from .rng import RandomStream, chunk_sizes

DEFAULT_TRIALS = 100_000
# above this many (trials x assignments) "auto" switches from exact OPT to the lower bound
AUTO_EXACT_WORK = 5 * 10**7
SLACK_SE = 3.0
_CHUNK_ELEMENTS = 2**22
# child-stream key reserved for the lower-bound sampler, away from per-chunk keys
_LOWER_BOUND_STREAM = 2**40

CSV_COLUMNS = [
    "n", "m", "structure", "dist", "mechanism", "params",
    "mech_mean", "mech_se", "opt_mean", "opt_se", "opt_method", "ratio",
    "bound_name", "bound_value", "bound_satisfied", "error",
]


class ConfigError(ValueError):
    pass


class TrialError(RuntimeError):
    def __init__(self, trial: int, cause: Exception):
        super().__init__(f"trial {trial}: {cause}")
        self.trial = trial


@dataclass(frozen=True)
class BoundCheck:
    name: str
    value: float
    satisfied: bool
    hypothesis: str


@dataclass
class RatioReport:
    mech_estimate: EstimateReport
    opt_estimate: EstimateReport
    opt_method: str
    ratio: float
    ratio_se: float
    bound_checks: list[BoundCheck] = field(default_factory=list)


# ---------------------------------------------------------------- bounds

def theoretical_bounds(n: int, m: int, dist_info: dict | None = None) -> list[tuple[str, float, str]]:
    """Guarantees for VCG whose hypotheses hold at ``(n, m)``.

    ``dist_info`` describes the i.i.d. law: ``e_min`` = E[min of n],
    ``e_min_sq`` = E[(min of n)^2], ``stretch`` = k(n), and
    ``continuous_mhr``.  Without it an i.i.d. continuous MHR law is assumed
    and only the distribution-free formulas are returned.  Names ending in
    ``_ratio`` bound the approximation ratio; ``_makespan_ub`` names bound
    E[VCG makespan].
    """
    info = dict(dist_info or {})
    mhr = info.get("continuous_mhr", True)
    out = []
    ln = math.log(n)
    e_min = info.get("e_min")
    if mhr and e_min is not None:
        out.append(("eq3_makespan_ub", 2.0 * (ln + m / n) * e_min, "iid continuous MHR"))
    if e_min is not None and info.get("e_min_sq") is not None:
        mu = m / n * e_min
        var = m * (info["e_min_sq"] / n - e_min**2 / n**2)
        out.append(("aven_makespan_ub", aven_bound(mu, math.sqrt(max(var, 0.0)), n), "iid"))
    if not mhr:
        return out
    out.append(("thm33_ratio", 2.0 * (1.0 + n * ln / m), "iid continuous MHR"))
    if m >= n * ln:
        out.append(("cor34_ratio", 4.0, "iid continuous MHR, m >= n ln n"))
    if n >= 2 and m <= n * ln and info.get("stretch"):
        out.append(("thm35_ratio", 4.0 * ln / info["stretch"], "iid k-stretched MHR, m <= n ln n"))
    if m >= n * n:
        out.append(("thm37_ratio", 1.0 + math.sqrt(2.0), "iid continuous MHR, m >= n^2"))
    return out


def dist_info_for(inst: SchedulingInstance) -> dict | None:
    """Closed-form order statistics of an i.i.d. instance, or None."""
    if inst.structure != IID:
        return None
    d = inst.dists[0]
    info: dict[str, Any] = {"continuous_mhr": bool(d.continuous and is_mhr_numeric(d))}
    for key, fn in (("e_min", expect_min_of_n), ("e_min_sq", expect_min_sq_of_n), ("stretch", stretch_factor)):
        try:
            info[key] = fn(d, inst.n)
        except NoClosedFormError:
            pass
    return info


# ---------------------------------------------------------------- simulation

def _simulate(inst: SchedulingInstance, mech: MechanismSpec, trials: int, seed: int, with_opt: bool):
    stream = RandomStream(seed)
    per = max(1, _CHUNK_ELEMENTS // (inst.n * inst.m))
    mech_vals, opt_vals = [], []
    start = 0
    for k, size in enumerate(chunk_sizes(trials, per)):
        sub = stream.child(k)
        batch = sample_matrices(inst, sub, size)
        if mech.name == "vcg":
            mech_vals.append(vcg_makespans_batch(batch, mech.tie_break, sub))
        else:
            vals = np.empty(size)
            for idx, t in enumerate(batch):
                try:
                    vals[idx] = makespan(t, mech.allocate(t, sub))
                except Exception as exc:
                    raise TrialError(start + idx, exc) from exc
            mech_vals.append(vals)
        if with_opt:
            opt_vals.append(opt_exhaustive_batch(batch))
        start += size
    mech_arr = np.concatenate(mech_vals)
    return mech_arr, (np.concatenate(opt_vals) if with_opt else None)


def estimate_mech_makespan(inst: SchedulingInstance, mech, trials: int, seed: int) -> EstimateReport:
    """E[makespan of ``mech``]: sample a matrix, allocate, measure, repeat."""
    if trials < 1:
        raise ValueError("trials must be positive")
    mech = _as_mech(mech)
    vals, _ = _simulate(inst, mech, trials, seed, with_opt=False)
    return EstimateReport.from_samples(vals, seed)


def resolve_opt_method(inst: SchedulingInstance, trials: int) -> str:
    if inst.deterministic:
        return "exact_per_sample"
    work = inst.n**inst.m
    if work <= EXHAUSTIVE_BUDGET and work * trials <= AUTO_EXACT_WORK:
        return "exact_per_sample"
    if inst.machine_identical:
        return "lower_bound"
    if work <= EXHAUSTIVE_BUDGET:
        return "exact_per_sample"
    raise BudgetExceededError(
        f"no exact OPT for a general {inst.n}x{inst.m} instance and no lower bound without machine-identical laws"
    )


def estimate_expected_opt(inst: SchedulingInstance, trials: int, seed: int, method: str = "auto") -> EstimateReport:
    """E[OPT] either exactly per sampled matrix or via the machine-identical lower bound."""
    if method == "auto":
        method = resolve_opt_method(inst, trials)
    if method == "lower_bound":
        high, avg = opt_lower_bound_terms(inst, trials, RandomStream(seed).child(_LOWER_BOUND_STREAM))
        return high if high.mean >= avg.mean else avg
    if method != "exact_per_sample":
        raise ConfigError(f"unknown opt method {method!r}")
    if inst.deterministic:
        return EstimateReport.exact(solve_opt(sample_matrix(inst, RandomStream(seed))).value, seed, trials)
    if inst.n**inst.m > EXHAUSTIVE_BUDGET:
        raise BudgetExceededError(
            f"{inst.n}^{inst.m} assignments per sample exceed the budget; use method='lower_bound'"
        )
    stream = RandomStream(seed)
    per = max(1, _CHUNK_ELEMENTS // (inst.n * inst.m))
    vals = [opt_exhaustive_batch(sample_matrices(inst, stream.child(k), size))
            for k, size in enumerate(chunk_sizes(trials, per))]
    return EstimateReport.from_samples(np.concatenate(vals), seed)


def ratio(inst: SchedulingInstance, mech, trials: int, seed: int, opt_method: str = "auto") -> RatioReport:
    """Ratio of means E[mech] / E[OPT] with a delta-method standard error.

    With ``exact_per_sample`` both means come from the same matrices.  With
    ``lower_bound`` the denominator underestimates E[OPT], so the ratio
    overestimates the true one.
    """
    mech = _as_mech(mech)
    method = resolve_opt_method(inst, trials) if opt_method == "auto" else opt_method
    if method == "exact_per_sample" and not inst.deterministic:
        if inst.n**inst.m > EXHAUSTIVE_BUDGET:
            raise BudgetExceededError("exact OPT per sample exceeds the budget; use opt_method='lower_bound'")
        x, y = _simulate(inst, mech, trials, seed, with_opt=True)
        mech_est = EstimateReport.from_samples(x, seed)
        opt_est = EstimateReport.from_samples(y, seed)
        r = mech_est.mean / opt_est.mean
        if trials > 1:
            cov = np.cov(x, y, ddof=1)
            var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (trials * opt_est.mean**2)
            r_se = math.sqrt(max(var, 0.0))
        else:
            r_se = 0.0
    else:
        mech_est = estimate_mech_makespan(inst, mech, trials, seed)
        opt_est = estimate_expected_opt(inst, trials, seed, method)
        r = mech_est.mean / opt_est.mean
        r_se = math.hypot(mech_est.std_error, r * opt_est.std_error) / opt_est.mean
    report = RatioReport(mech_est, opt_est, method, r, r_se)
    if mech.name == "vcg":
        report.bound_checks = _check_bounds(inst, report)
    return report


def _check_bounds(inst: SchedulingInstance, report: RatioReport) -> list[BoundCheck]:
    info = dist_info_for(inst)
    if info is None:
        return []
    checks = []
    for name, value, hyp in theoretical_bounds(inst.n, inst.m, info):
        if name.endswith("_ratio"):
            ok = report.ratio <= value + SLACK_SE * report.ratio_se
        else:
            est = report.mech_estimate
            ok = est.mean <= value + SLACK_SE * est.std_error
        checks.append(BoundCheck(name, value, bool(ok), hyp))
    return checks


# ---------------------------------------------------------------- config

def _as_mech(mech) -> MechanismSpec:
    if isinstance(mech, MechanismSpec):
        return mech
    try:
        return MechanismSpec.from_dict(mech)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def instance_from_dict(spec: dict, n: int, m) -> SchedulingInstance:
    """Build an instance from ``{"family": ..., ...}`` at size ``(n, m)``.

    Families: ``iid`` (with ``dist``), ``machine_identical`` (with ``dists``,
    cycled to ``m`` tasks), ``unit_and_small``, ``bernoulli_iid`` and
    ``dominant_machine`` (with ``eps``).  An optional ``smooth`` half-width
    turns point masses into narrow uniforms.
    """
    m = m_of_n(m, n)
    family = spec.get("family", "iid")
    if family == "iid":
        inst = make_iid(n, m, dists.from_dict(spec["dist"]))
    elif family == "machine_identical":
        pool = [dists.from_dict(d) for d in spec["dists"]]
        inst = make_machine_identical(n, [pool[j % len(pool)] for j in range(m)])
    elif family == "unit_and_small":
        inst = gen_unit_and_small(n, m)
    elif family == "bernoulli_iid":
        inst = gen_bernoulli_iid(n, m)
    elif family == "dominant_machine":
        inst = gen_dominant_machine(n, m, float(spec.get("eps", 0.1)))
    else:
        raise ConfigError(f"unknown instance family {family!r}")
    if spec.get("smooth"):
        inst = inst.smooth(float(spec["smooth"]))
    return inst


def expand_cells(config: dict) -> list[dict]:
    """Grid cells in deterministic order (n, m, instance, mechanism), then explicit ``cells``."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    cells = []
    grid = config.get("grid") or {}
    if grid:
        for key in ("n", "m", "instances", "mechanisms"):
            if key not in grid:
                raise ConfigError(f"grid is missing {key!r}")
        for n, m, inst, mech in itertools.product(grid["n"], grid["m"], grid["instances"], grid["mechanisms"]):
            cells.append({"n": n, "m": m, "instance": inst, "mechanism": mech})
    for cell in config.get("cells", []):
        for key in ("n", "m", "instance"):
            if key not in cell:
                raise ConfigError(f"cell {cell!r} is missing {key!r}")
        cells.append(cell)
    return cells


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def run_cell(cell: dict, defaults: dict, estimate_only: bool = False) -> dict:
    """One output row; failures land in the ``error`` column."""
    trials = int(cell.get("trials", defaults.get("trials", DEFAULT_TRIALS)))
    seed = int(cell.get("seed", defaults.get("seed", 0)))
    opt_method = cell.get("opt_method", defaults.get("opt_method", "auto"))
    mech_spec = cell.get("mechanism", {"mechanism": "vcg"})
    row = {c: "" for c in CSV_COLUMNS}
    row.update(n=cell["n"], m=cell["m"], mechanism=mech_spec.get("mechanism", mech_spec.get("name", "vcg")))
    try:
        inst = instance_from_dict(cell["instance"], int(cell["n"]), cell["m"])
        mech = _as_mech(mech_spec)
        row.update(m=inst.m, structure=inst.structure, dist=inst.label(), params=mech.params_label())
        if estimate_only:
            est = estimate_mech_makespan(inst, mech, trials, seed)
            row.update(mech_mean=est.mean, mech_se=est.std_error)
            return row
        rep = ratio(inst, mech, trials, seed, opt_method)
        row.update(
            mech_mean=rep.mech_estimate.mean, mech_se=rep.mech_estimate.std_error,
            opt_mean=rep.opt_estimate.mean, opt_se=rep.opt_estimate.std_error,
            opt_method=rep.opt_method, ratio=rep.ratio,
            bound_name=";".join(b.name for b in rep.bound_checks),
            bound_value=";".join(repr(b.value) for b in rep.bound_checks),
            bound_satisfied=";".join(_fmt_bool(b.satisfied) for b in rep.bound_checks),
        )
    except Exception as exc:  # recorded per cell; the sweep carries on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _run_cell_args(args):
    return run_cell(*args)


def sweep(config: dict, workers: int = 1, estimate_only: bool = False) -> list[dict]:
    """Run every cell of ``config``; rows come back in grid order."""
    cells = expand_cells(config)
    defaults = {k: config[k] for k in ("trials", "seed", "opt_method") if k in config}
    jobs = [(cell, defaults, estimate_only) for cell in cells]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell_args, jobs))
    return [run_cell(*job) for job in jobs]


def _cell_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell_value(row.get(k, "")) for k in CSV_COLUMNS})
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    out = []
    for row in rows:
        rec = {k: row.get(k, "") for k in CSV_COLUMNS}
        names = [s for s in str(rec["bound_name"]).split(";") if s]
        values = [float(s) for s in str(rec["bound_value"]).split(";") if s]
        sat = [s == "true" for s in str(rec["bound_satisfied"]).split(";") if s]
        rec["bound_checks"] = [{"name": a, "value": b, "satisfied": c} for a, b, c in zip(names, values, sat)]
        for k in ("bound_name", "bound_value", "bound_satisfied"):
            rec.pop(k)
        out.append(rec)
    return json.dumps(out, indent=2)
