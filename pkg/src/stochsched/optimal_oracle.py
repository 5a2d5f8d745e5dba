"""Exact optimal makespan on realised matrices, and lower bounds on E[OPT]."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator

import numba
import numpy as np

from .distributions import PointMass
from .estimates import EstimateReport
from .instances import SchedulingInstance, is_column_constant, sample_matrices, validate_matrix
from .order_stats import NoClosedFormError, expect_max_of_mins, expect_min_of_n
from .rng import as_stream, chunk_sizes

EXHAUSTIVE_BUDGET = 10**7
DP_MAX_TASKS = 24
_CHUNK_ELEMENTS = 2**22


class BudgetExceededError(ValueError):
    pass


@dataclass(frozen=True)
class OptResult:
    value: float
    method: str  # "exhaustive" | "identical_dp" | "lower_bound"


def _partial_loads(t: np.ndarray) -> np.ndarray:
    """Machine loads for every assignment of the columns of ``t``, in
    mixed-radix order (first task most significant); shape ``(n**k, n)``."""
    n, k = t.shape
    loads = np.zeros((1, n))
    for j in range(k):
        loads = (loads[:, None, :] + np.diag(t[:, j])[None, :, :]).reshape(-1, n)
    return loads


def iter_assignment_makespans(t: np.ndarray, budget: int = EXHAUSTIVE_BUDGET) -> Iterator[np.ndarray]:
    """Yield makespans of all ``n**m`` assignments in chunks.

    Tasks are split in two halves whose load tables are combined blockwise,
    so each makespan is a fresh sum of two partial loads.
    """
    n, m = t.shape
    if n**m > budget:
        raise BudgetExceededError(
            f"{n}^{m} assignments exceed the enumeration budget {budget}; "
            "use opt_identical_dp for column-constant matrices or expected_opt_lower_bound"
        )
    head = _partial_loads(t[:, : m // 2])
    tail = _partial_loads(t[:, m // 2 :])
    step = max(1, _CHUNK_ELEMENTS // (tail.shape[0] * n))
    for s in range(0, head.shape[0], step):
        yield (head[s : s + step, None, :] + tail[None, :, :]).max(axis=-1)


def opt_exhaustive(t, budget: int = EXHAUSTIVE_BUDGET) -> float:
    """Minimum makespan over all ``n**m`` assignments."""
    t = validate_matrix(t)
    return float(min(block.min() for block in iter_assignment_makespans(t, budget)))


def _assignment_table(n: int, m: int) -> np.ndarray:
    digits = np.indices((n,) * m).reshape(m, -1).T
    return (digits[:, :, None] == np.arange(n)).astype(float)


def opt_exhaustive_batch(batch: np.ndarray) -> np.ndarray:
    """Exact OPT for each matrix of a ``(T, n, m)`` stack with small ``n**m``."""
    batch = np.asarray(batch, dtype=float)
    T, n, m = batch.shape
    if n**m > 2**14:
        return np.array([opt_exhaustive(t) for t in batch])
    table = _assignment_table(n, m)
    step = max(1, _CHUNK_ELEMENTS // (table.shape[0] * n))
    out = np.empty(T)
    for s in range(0, T, step):
        loads = np.einsum("tij,aji->tai", batch[s : s + step], table)
        out[s : s + step] = loads.max(axis=2).min(axis=1)
    return out


@numba.njit(cache=True)
def _packs_into(w, bins_avail, cap):
    # dp over subsets: fewest bins used, then smallest load in the open bin
    m = w.shape[0]
    size = 1 << m
    nbins = np.empty(size, np.int32)
    load = np.empty(size, np.float64)
    nbins[0] = 1
    load[0] = 0.0
    for mask in range(1, size):
        bb = 1 << 30
        bl = np.inf
        for k in range(m):
            bit = 1 << k
            if mask & bit:
                p = mask ^ bit
                if load[p] + w[k] <= cap:
                    cb = nbins[p]
                    cl = load[p] + w[k]
                else:
                    cb = nbins[p] + 1
                    cl = w[k]
                if cb < bb or (cb == bb and cl < bl):
                    bb = cb
                    bl = cl
        nbins[mask] = bb
        load[mask] = bl
    return nbins[size - 1] <= bins_avail


def _subset_sums(w: np.ndarray) -> np.ndarray:
    sums = np.zeros(1)
    for x in w:
        sums = np.concatenate([sums, sums + x])
    return sums


def _lpt(w: np.ndarray, n: int) -> float:
    heap = [0.0] * n
    for x in sorted(w, reverse=True):
        heapq.heappush(heap, heapq.heappop(heap) + x)
    return max(heap)


def opt_identical_dp(weights, n: int) -> float:
    """Exact makespan for identical machines (a column-constant matrix).

    Binary search over the achievable subset sums between the trivial lower
    bound and the LPT makespan; each probe is a bin-packing feasibility DP
    over all ``2**m`` task subsets.
    """
    w = np.asarray(weights, dtype=float).ravel()
    m = w.size
    if n < 1:
        raise ValueError("n must be positive")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if m == 0:
        return 0.0
    if n >= m:
        return float(w.max())
    if m > DP_MAX_TASKS:
        raise BudgetExceededError(f"subset DP supports at most {DP_MAX_TASKS} tasks, got {m}")
    if n == 1:
        return math.fsum(w)
    w = np.sort(w)[::-1].copy()
    lower = max(float(w[0]), math.fsum(w) / n)
    upper = _lpt(w, n)
    if upper <= lower:
        return upper  # LPT already meets the lower bound
    rel = 1e-12
    half = m // 2
    head, tail = _subset_sums(w[:half]), _subset_sums(w[half:])
    found = []
    step = max(1, _CHUNK_ELEMENTS // tail.size)
    for s in range(0, head.size, step):
        sums = (head[s : s + step, None] + tail[None, :]).ravel()
        found.append(sums[(sums >= lower * (1 - rel)) & (sums <= upper * (1 + rel))])
    cands = np.unique(np.concatenate(found))

    def fits(c):
        return _packs_into(w, n, c * (1 + rel))

    # a candidate is a subset sum accumulated in another order than the
    # optimal machine's, so it may sit one ulp under the largest weight
    if cands.size == 0:
        return upper
    if fits(cands[0]):
        return max(float(cands[0]), float(w[0]))
    lo, hi = 0, cands.size - 1  # cands[lo] infeasible, cands[hi] feasible (LPT)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(cands[mid]):
            hi = mid
        else:
            lo = mid
    return max(float(cands[hi]), float(w[0]))


def solve_opt(t) -> OptResult:
    """Exact OPT, using the identical-machine DP when the matrix allows it."""
    t = validate_matrix(t)
    n, m = t.shape
    if is_column_constant(t) and (m <= DP_MAX_TASKS or n >= m):
        return OptResult(opt_identical_dp(t[0], n), "identical_dp")
    return OptResult(opt_exhaustive(t), "exhaustive")


def opt_lower_bound_terms(
    inst: SchedulingInstance, trials: int = 100_000, rng=0
) -> tuple[EstimateReport, EstimateReport]:
    """The two standard lower bounds on E[OPT] for machine-identical laws:
    E[max_j min-of-n of task j] and (1/n) sum_j E[min-of-n of task j].

    Closed forms are used when every task law has one; otherwise both terms
    come from one Monte Carlo sample of ``trials`` matrices.
    """
    if not inst.machine_identical:
        raise ValueError("OPT lower bounds need machine-identical laws")
    n = inst.n
    rng = as_stream(rng)
    tasks = inst.task_dists()
    try:
        if inst.structure == "iid":
            d = tasks[0]
            high = expect_max_of_mins(d, n, inst.m)
            avg = inst.m * expect_min_of_n(d, n) / n
        elif all(isinstance(d, PointMass) for d in tasks):
            high = max(d.value for d in tasks)
            avg = math.fsum(d.value for d in tasks) / n
        else:
            raise NoClosedFormError
        return EstimateReport.exact(high, rng.seed), EstimateReport.exact(avg, rng.seed)
    except NoClosedFormError:
        pass
    highs, avgs = [], []
    per = max(1, _CHUNK_ELEMENTS // (n * inst.m))
    for k, size in enumerate(chunk_sizes(trials, per)):
        mins = sample_matrices(inst, rng.child(k), size).min(axis=1)
        highs.append(mins.max(axis=1))
        avgs.append(mins.sum(axis=1) / n)
    return (
        EstimateReport.from_samples(np.concatenate(highs), rng.seed),
        EstimateReport.from_samples(np.concatenate(avgs), rng.seed),
    )


def expected_opt_lower_bound(inst: SchedulingInstance, trials: int = 100_000, rng=0) -> float:
    high, avg = opt_lower_bound_terms(inst, trials, rng)
    return max(high.mean, avg.mean)
