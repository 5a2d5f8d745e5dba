"""Scheduling instances: ``n`` machines, ``m`` tasks, one law per cell.

A time matrix is a plain ``(n, m)`` float array; row ``i`` is machine ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import Distribution, PointMass, TwoPoint, smooth

GENERAL = "general"
MACHINE_IDENTICAL = "machine_identical"
IID = "iid"


@dataclass(frozen=True)
class SchedulingInstance:
    """``dists`` holds one law for ``iid``, one per task for
    ``machine_identical`` and an ``n``-tuple of ``m``-tuples for ``general``."""

    n: int
    m: int
    structure: str
    dists: tuple
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one machine")
        if self.m < self.n:
            raise ValueError(f"need m >= n tasks, got n={self.n}, m={self.m}")
        if self.structure == IID:
            ok = len(self.dists) == 1
        elif self.structure == MACHINE_IDENTICAL:
            ok = len(self.dists) == self.m
        elif self.structure == GENERAL:
            ok = len(self.dists) == self.n and all(len(r) == self.m for r in self.dists)
        else:
            raise ValueError(f"unknown structure {self.structure!r}")
        if not ok:
            raise ValueError(f"dists do not match structure {self.structure} for n={self.n}, m={self.m}")

    def dist(self, i: int, j: int) -> Distribution:
        if self.structure == IID:
            return self.dists[0]
        if self.structure == MACHINE_IDENTICAL:
            return self.dists[j]
        return self.dists[i][j]

    def task_dists(self) -> tuple:
        """Per-task laws; only defined when machines are identical."""
        if self.structure == IID:
            return self.dists * self.m
        if self.structure == MACHINE_IDENTICAL:
            return self.dists
        raise ValueError("task_dists needs machine-identical structure")

    @property
    def machine_identical(self) -> bool:
        return self.structure in (IID, MACHINE_IDENTICAL)

    def cells(self) -> list[list[Distribution]]:
        return [[self.dist(i, j) for j in range(self.m)] for i in range(self.n)]

    def unique_dists(self) -> list[Distribution]:
        seen = {}
        for d in (self.dists if self.structure != GENERAL else [d for row in self.dists for d in row]):
            seen.setdefault(d, None)
        return list(seen)

    @property
    def deterministic(self) -> bool:
        return all(isinstance(d, PointMass) for d in self.unique_dists())

    @property
    def continuous(self) -> bool:
        return all(d.continuous for d in self.unique_dists())

    def smooth(self, eps: float) -> "SchedulingInstance":
        """Swap every point mass for a uniform of half-width ``eps``."""
        if self.structure == GENERAL:
            dists = tuple(tuple(smooth(d, eps) for d in row) for row in self.dists)
        else:
            dists = tuple(smooth(d, eps) for d in self.dists)
        return SchedulingInstance(self.n, self.m, self.structure, dists, self.name)

    def label(self) -> str:
        if self.name:
            return self.name
        ds = self.unique_dists()
        return ds[0].label() if len(ds) == 1 else "mixed"


def make_iid(n: int, m: int, d: Distribution) -> SchedulingInstance:
    return SchedulingInstance(n, m, IID, (d,))


def make_machine_identical(n: int, task_dists: Sequence[Distribution]) -> SchedulingInstance:
    return SchedulingInstance(n, len(task_dists), MACHINE_IDENTICAL, tuple(task_dists))


def make_general(rows: Sequence[Sequence[Distribution]]) -> SchedulingInstance:
    rows = tuple(tuple(r) for r in rows)
    return SchedulingInstance(len(rows), len(rows[0]) if rows else 0, GENERAL, rows)


def gen_unit_and_small(n: int, m: int) -> SchedulingInstance:
    """``n - 1`` unit tasks plus ``m - n + 1`` tasks of size ``1/(m - n + 1)``.

    Every realisation has optimal makespan exactly 1 while VCG scatters the
    unit tasks like balls into bins.
    """
    if n < 2:
        raise ValueError("unit-and-small instance needs n >= 2")
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    small = PointMass(1.0 / (m - n + 1))
    dists = (PointMass(1.0),) * (n - 1) + (small,) * (m - n + 1)
    return SchedulingInstance(n, m, MACHINE_IDENTICAL, dists, name="unit_and_small")


def bernoulli_p(n: int, m: int) -> float:
    return (n / (2 * m)) ** (1.0 / n)


def gen_bernoulli_iid(n: int, m: int) -> SchedulingInstance:
    """i.i.d. {0,1} times with P(1) = (n / 2m)^(1/n), so E[#tasks costing 1 everywhere] = n/2."""
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    inst = make_iid(n, m, TwoPoint(0.0, 1.0, bernoulli_p(n, m)))
    return SchedulingInstance(inst.n, inst.m, inst.structure, inst.dists, name="bernoulli_iid")


def gen_dominant_machine(n: int, m: int, eps: float) -> SchedulingInstance:
    """Machine 0 takes ``1 - eps`` on every task, the others take 1.

    Tasks are identically distributed but machines are not, so VCG piles
    everything onto machine 0.  ``m`` divisible by ``n`` gives the cleanest
    comparison.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    fast = (PointMass(1.0 - eps),) * m
    slow = (PointMass(1.0),) * m
    rows = (fast,) + (slow,) * (n - 1)
    return SchedulingInstance(n, m, GENERAL, rows, name="dominant_machine")


def sample_matrices(inst: SchedulingInstance, rng, count: int) -> np.ndarray:
    """``count`` independent realisations, shape ``(count, n, m)``."""
    n, m = inst.n, inst.m
    if inst.structure == IID:
        return np.asarray(inst.dists[0].sample(rng, (count, n, m)), dtype=float)
    out = np.empty((count, n, m))
    if inst.structure == MACHINE_IDENTICAL:
        groups: dict = {}
        for j, d in enumerate(inst.dists):
            groups.setdefault(d, []).append(j)
        for d, cols in groups.items():
            out[:, :, cols] = d.sample(rng, (count, n, len(cols)))
        return out
    groups = {}
    for i, row in enumerate(inst.dists):
        for j, d in enumerate(row):
            groups.setdefault(d, []).append(i * m + j)
    flat = out.reshape(count, n * m)
    for d, cells in groups.items():
        flat[:, cells] = d.sample(rng, (count, len(cells)))
    return out


def sample_matrix(inst: SchedulingInstance, rng) -> np.ndarray:
    return sample_matrices(inst, rng, 1)[0]


def is_column_constant(t: np.ndarray) -> bool:
    t = np.asarray(t)
    return bool(np.all(t == t[:1]))


def validate_matrix(t, allow_inf: bool = False) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise ValueError(f"time matrix must be 2-D and nonempty, got shape {t.shape}")
    bad = np.isnan(t) | (t < 0) | (~np.isfinite(t) if not allow_inf else False)
    if np.any(bad):
        raise ValueError("time matrix entries must be finite and nonnegative")
    return t


def m_of_n(rule, n: int) -> int:
    """Resolve a task-count rule: an int, ``"n"``, ``"n^2"``, ``"<k>n"`` or ``"nlogn"``."""
    if isinstance(rule, int):
        return rule
    s = str(rule).replace(" ", "").lower()
    if s == "n":
        return n
    if s in ("n^2", "n**2", "n2"):
        return n * n
    if s in ("nlogn", "nlnn"):
        return max(n, math.ceil(n * math.log(n)))
    if s.endswith("n") and s[:-1].isdigit():
        return int(s[:-1]) * n
    if s.isdigit():
        return int(s)
    raise ValueError(f"cannot interpret task count {rule!r}")
