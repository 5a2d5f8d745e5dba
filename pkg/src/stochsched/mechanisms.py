"""Truthful allocation rules for scheduling on unrelated machines.

Only allocations are computed; payments are out of scope.  An allocation is
an integer array ``a`` of length ``m`` with ``a[j]`` the machine running
task ``j``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instances import validate_matrix

# magnitude of the random cost jitter used for tie-breaking in the assignment solver
TIE_NOISE = 1e-12
# relative tolerance when comparing optimal assignment costs
COST_TOL = 1e-9
EXACT_VCG_BUDGET = 10**7


class TieBreak(str, enum.Enum):
    UNIFORM_RANDOM = "uniform_random"
    FIXED_ORDER = "fixed_order"


class InfeasibleCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class SieveParams:
    c: float
    beta: float
    delta: float

    def __post_init__(self):
        if not self.c >= 1:
            raise ValueError(f"sieve parameter c must be >= 1, got {self.c}")
        if not self.beta > 0:
            raise ValueError(f"sieve threshold beta must be positive, got {self.beta}")
        if not 0 < self.delta < 1:
            raise ValueError(f"sieve fraction delta must lie in (0, 1), got {self.delta}")


def _need_rng(rng, tie_break):
    if rng is None and TieBreak(tie_break) is TieBreak.UNIFORM_RANDOM:
        raise ValueError("uniform_random tie-breaking needs an rng")


def vcg_allocate(t, tie_break=TieBreak.UNIFORM_RANDOM, rng=None) -> np.ndarray:
    """Give every task to a machine minimising its processing time."""
    t = validate_matrix(t, allow_inf=True)
    mins = t.min(axis=0)
    if not np.all(np.isfinite(mins)):
        bad = np.nonzero(~np.isfinite(mins))[0].tolist()
        raise ValueError(f"tasks {bad} have no finite processing time")
    if TieBreak(tie_break) is TieBreak.FIXED_ORDER:
        return np.argmin(t, axis=0)
    _need_rng(rng, tie_break)
    keys = np.where(t == mins, rng.random(t.shape), np.inf)
    return np.argmin(keys, axis=0)


def vcg_makespans_batch(batch: np.ndarray, tie_break=TieBreak.UNIFORM_RANDOM, rng=None) -> np.ndarray:
    """VCG makespans for a stack of matrices of shape ``(T, n, m)``."""
    batch = np.asarray(batch, dtype=float)
    T, n, m = batch.shape
    mins = batch.min(axis=1)
    if TieBreak(tie_break) is TieBreak.FIXED_ORDER:
        who = np.argmin(batch, axis=1)
    else:
        _need_rng(rng, tie_break)
        keys = np.where(batch == mins[:, None, :], rng.random(batch.shape), np.inf)
        who = np.argmin(keys, axis=1)
    slots = (np.arange(T)[:, None] * n + who).ravel()
    loads = np.bincount(slots, weights=mins.ravel(), minlength=T * n).reshape(T, n)
    return loads.max(axis=1)


def vcg_expected_makespan_exact(t, budget: int = EXACT_VCG_BUDGET) -> float:
    """Expected VCG makespan on a fixed matrix, averaging over every way of
    breaking ties uniformly at random."""
    t = validate_matrix(t)
    n, m = t.shape
    ties = [np.nonzero(t[:, j] == t[:, j].min())[0] for j in range(m)]
    count = math.prod(len(s) for s in ties)
    if count > budget:
        raise ValueError(f"{count} tie outcomes exceed the enumeration budget {budget}")
    loads = np.zeros((1, n))
    for j, s in enumerate(ties):
        if len(s) == 1:
            loads[:, s[0]] += t[s[0], j]
            continue
        step = np.zeros((len(s), n))
        step[np.arange(len(s)), s] = t[s, j]
        loads = (loads[:, None, :] + step[None, :, :]).reshape(-1, n)
    return float(loads.max(axis=1).sum() / count)


def machine_loads(t, a) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = np.asarray(a)
    n, m = t.shape
    if a.shape != (m,):
        raise ValueError(f"allocation has shape {a.shape}, expected ({m},)")
    if m and (a.min() < 0 or a.max() >= n):
        raise ValueError("allocation refers to a machine outside the matrix")
    cost = t[a, np.arange(m)]
    return np.array([math.fsum(cost[a == i]) for i in range(n)])


def makespan(t, a) -> float:
    """Largest total processing time on any machine (sums are exact-rounded)."""
    return float(machine_loads(t, a).max())


def total_cost(costs, a) -> float:
    costs = np.asarray(costs, dtype=float)
    return math.fsum(costs[np.asarray(a), np.arange(costs.shape[1])])


def _solve_capacitated(costs: np.ndarray, cap: int) -> np.ndarray:
    n, m = costs.shape
    # one column per machine slot; machine i owns columns [i*cap, (i+1)*cap)
    slots = np.repeat(costs.T, cap, axis=1)
    rows, cols = linear_sum_assignment(slots)
    a = np.empty(m, dtype=int)
    a[rows] = cols // cap
    return a


def _lexicographic_refine(costs: np.ndarray, cap: int, a: np.ndarray) -> np.ndarray:
    # Among cost-optimal assignments, walk tasks in order and pin each to the
    # lowest machine index that still admits an optimal completion.
    best = total_cost(costs, a)
    tol = COST_TOL * max(1.0, abs(best))
    pinned = costs.copy()
    for j in range(costs.shape[1]):
        for i in range(a[j]):
            trial = pinned.copy()
            trial[:, j] = np.inf
            trial[i, j] = costs[i, j]
            try:
                cand = _solve_capacitated(trial, cap)
            except ValueError:
                continue
            if total_cost(costs, cand) <= best + tol:
                a = cand
                break
        pinned[:, j] = np.inf
        pinned[a[j], j] = costs[a[j], j]
    return a


def capacitated_min_cost_assignment(
    costs, cap: int, tie_break=TieBreak.UNIFORM_RANDOM, rng=None
) -> np.ndarray:
    """Minimise total cost with at most ``cap`` tasks per machine.

    The problem is solved exactly as a rectangular assignment problem with
    each machine replicated ``cap`` times.  Ties between optimal solutions:
    ``uniform_random`` jitters the costs by less than ``1e-12`` (relative to
    the largest cost) before solving; ``fixed_order`` returns the
    lexicographically smallest optimal assignment (earlier tasks on
    lower-indexed machines).
    """
    costs = validate_matrix(costs)
    n, m = costs.shape
    cap = int(cap)
    if cap < 1 or n * cap < m:
        raise InfeasibleCapacityError(f"cap={cap} cannot place {m} tasks on {n} machines")
    tie_break = TieBreak(tie_break)
    _need_rng(rng, tie_break)
    if cap >= m:
        return vcg_allocate(costs, tie_break, rng)
    if tie_break is TieBreak.UNIFORM_RANDOM:
        scale = max(1.0, float(costs.max()))
        return _solve_capacitated(costs + rng.random(costs.shape) * (TIE_NOISE * scale), cap)
    return _lexicographic_refine(costs, cap, _solve_capacitated(costs, cap))


def bounded_overload_cap(n: int, m: int, c: float) -> int:
    """``floor(c m / n)``, raised to ``ceil(m / n)`` when that is infeasible."""
    if not c >= 1:
        raise ValueError(f"bounded overload parameter c must be >= 1, got {c}")
    hard = math.floor(c * m / n * (1 + 1e-12))
    return max(-(-m // n), hard)


def bounded_overload_allocate(t, c: float, tie_break=TieBreak.UNIFORM_RANDOM, rng=None) -> np.ndarray:
    t = validate_matrix(t)
    n, m = t.shape
    return capacitated_min_cost_assignment(t, bounded_overload_cap(n, m, c), tie_break, rng)


def sieve_partition(n: int, delta: float) -> tuple[int, int]:
    """Sizes (first set, second set); the second set has ``max(1, floor(delta n))`` machines."""
    second = max(1, math.floor(delta * n))
    first = n - second
    if first < 1:
        raise ValueError(f"cannot split {n} machines with delta={delta}")
    return first, second


def sieve_bo_allocate(t, params: SieveParams, rng) -> np.ndarray:
    """Sieve then bounded overload.

    Times above ``beta`` on the first machine set are discarded (a time equal
    to ``beta`` is kept).  Tasks left with no finite time there go to bounded
    overload on the second set; the rest are placed by VCG on the first set.
    Both phases break ties uniformly at random.
    """
    t = validate_matrix(t)
    n, m = t.shape
    n1, n2 = sieve_partition(n, params.delta)
    first = np.where(t[:n1] > params.beta, np.inf, t[:n1])
    routed = ~np.isfinite(first.min(axis=0))
    a = np.empty(m, dtype=int)
    kept = np.nonzero(~routed)[0]
    if kept.size:
        a[kept] = vcg_allocate(first[:, kept], TieBreak.UNIFORM_RANDOM, rng)
    rest = np.nonzero(routed)[0]
    if rest.size:
        a[rest] = n1 + bounded_overload_allocate(t[n1:, rest], params.c, TieBreak.UNIFORM_RANDOM, rng)
    return a


def round_robin_allocate(t) -> np.ndarray:
    """Task ``j`` to machine ``j mod n``; ``m/n`` tasks each when ``n`` divides ``m``."""
    n, m = np.shape(t)
    return np.arange(m) % n


def balance_expensive_allocate(t) -> np.ndarray:
    """Tasks with a zero-time machine go there; the remaining ("expensive")
    tasks are dealt round-robin, so each machine gets at most ``ceil(M/n)``."""
    t = validate_matrix(t)
    n, m = t.shape
    a = np.argmin(t, axis=0)
    costly = np.nonzero(t.min(axis=0) > 0)[0]
    a[costly] = np.arange(costly.size) % n
    return a


MECHANISMS = ("vcg", "bounded_overload", "sieve_bo")


@dataclass(frozen=True)
class MechanismSpec:
    """JSON-configurable mechanism, e.g. ``{"mechanism": "sieve_bo", "c": 2, "beta": 0.5, "delta": 0.25}``."""

    name: str = "vcg"
    tie_break: TieBreak = TieBreak.UNIFORM_RANDOM
    c: float | None = None
    beta: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.name not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.name!r}; expected one of {MECHANISMS}")
        object.__setattr__(self, "tie_break", TieBreak(self.tie_break))
        if self.name == "bounded_overload":
            if self.c is None or not self.c >= 1:
                raise ValueError("bounded_overload needs c >= 1")
        if self.name == "sieve_bo":
            SieveParams(self.c if self.c is not None else math.nan, self.beta or 0.0, self.delta or 0.0)

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "MechanismSpec":
        spec = dict(spec)
        name = spec.pop("mechanism", spec.pop("name", "vcg"))
        known = {"tie_break", "c", "beta", "delta"}
        extra = set(spec) - known
        if extra:
            raise ValueError(f"unknown mechanism fields {sorted(extra)}")
        return cls(name=name, **spec)

    def to_dict(self) -> dict:
        out = {"mechanism": self.name}
        if self.name != "sieve_bo":
            out["tie_break"] = self.tie_break.value
        for k in ("c", "beta", "delta"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        return out

    def params_label(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.to_dict().items() if k != "mechanism")

    def allocate(self, t, rng=None) -> np.ndarray:
        if self.name == "vcg":
            return vcg_allocate(t, self.tie_break, rng)
        if self.name == "bounded_overload":
            return bounded_overload_allocate(t, self.c, self.tie_break, rng)
        return sieve_bo_allocate(t, SieveParams(self.c, self.beta, self.delta), rng)

