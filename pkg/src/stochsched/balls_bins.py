"""Weighted balls into bins: maximum load, majorization and Aven's bound."""
from __future__ import annotations

import math

import numpy as np

from .estimates import EstimateReport
from .optimal_oracle import EXHAUSTIVE_BUDGET, iter_assignment_makespans
from .rng import as_stream, chunk_sizes

_CHUNK_ELEMENTS = 2**22
SUM_TOL = 1e-12


def _weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    return w


def max_loads(w, n: int, trials: int, rng) -> np.ndarray:
    """Maximum bin load for ``trials`` independent uniform placements."""
    w = _weights(w)
    m = w.size
    if m == 0:
        return np.zeros(trials)
    pos = rng.integers(0, n, size=(trials, m))
    slots = (np.arange(trials)[:, None] * n + pos).ravel()
    loads = np.bincount(slots, weights=np.tile(w, trials), minlength=trials * n)
    return loads.reshape(trials, n).max(axis=1)


def expected_max_load_mc(w, n: int, trials: int, rng) -> EstimateReport:
    """Monte Carlo estimate of E[max load] when each ball picks a bin uniformly."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    w = _weights(w)
    rng = as_stream(rng)
    if n == 1 or w.size <= 1:
        # placement cannot matter
        return EstimateReport.exact(math.fsum(w), rng.seed, trials)
    per = max(1, _CHUNK_ELEMENTS // (w.size + n))
    out = [max_loads(w, n, size, rng.child(k)) for k, size in enumerate(chunk_sizes(trials, per))]
    return EstimateReport.from_samples(np.concatenate(out), rng.seed)


def expected_max_load_exact(w, n: int, budget: int = EXHAUSTIVE_BUDGET) -> float:
    """E[max load] by enumerating all ``n**m`` equally likely placements."""
    if n < 1:
        raise ValueError("n must be positive")
    w = _weights(w)
    if w.size == 0:
        return 0.0
    t = np.tile(w, (n, 1))
    total = 0.0
    for block in iter_assignment_makespans(t, budget):
        total += float(block.sum())
    return total / n**w.size


def majorizes(w, w_prime, tol: float = SUM_TOL) -> bool:
    """Does ``w`` majorize ``w_prime``?  Equal totals and, after sorting both
    in non-increasing order, every prefix sum of ``w`` is at least the
    matching prefix of ``w_prime``.  Requires ``len(w) <= len(w_prime)``."""
    a = np.sort(_weights(w))[::-1]
    b = np.sort(_weights(w_prime))[::-1]
    if a.size > b.size:
        raise ValueError(f"majorization needs len(w) <= len(w'), got {a.size} > {b.size}")
    scale = max(1.0, float(b.sum()))
    if abs(math.fsum(a) - math.fsum(b)) > tol * scale:
        return False
    pa, pb = np.cumsum(a), np.cumsum(b[: a.size])
    return bool(np.all(pa >= pb - tol * scale))


def aven_bound(mu: float, sigma: float, n: int) -> float:
    """Upper bound mu + sqrt(n - 1) sigma on the expected maximum of n
    variables sharing mean mu and standard deviation sigma."""
    if n < 1:
        raise ValueError("n must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return mu + math.sqrt(n - 1) * sigma
