"""Processing-time distributions and hazard-rate machinery.

Five families are supported: :class:`PointMass`, :class:`Uniform`,
:class:`Exponential`, :class:`TwoPoint` and :class:`FiniteDiscrete`.  All
of them are immutable, hashable and vectorised over ``x``.

Hazard rates follow the usual two definitions: ``f(x) / (1 - F(x))`` for
continuous laws and ``P(X = x) / P(X >= x)`` at the atoms of discrete ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

PROB_TOL = 1e-12


class Distribution:
    """Base class; subclasses provide ``sample``, ``cdf`` and either ``pdf``
    (continuous) or ``atoms``/``probs`` (discrete).

    User code may subclass this with any continuous law that implements
    ``sample``, ``cdf``, ``pdf`` and ``support``.
    """

    continuous: bool = True

    def sample(self, rng, size=None):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def moment(self, r: int) -> float:
        raise NotImplementedError

    def grid(self, points: int) -> np.ndarray:
        """Evaluation points for numeric hazard checks."""
        lo, hi = self.support()
        if not math.isfinite(hi):
            hi = self.ppf(1.0 - 1e-9)
        # hazard blows up at the right end of a bounded support
        return np.linspace(lo, hi, points, endpoint=not math.isfinite(self.support()[1]))

    def ppf(self, q: float) -> float:
        raise NotImplementedError

    def label(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_nonneg(name: str, v: float):
    if not (math.isfinite(v) and v >= 0):
        raise ValueError(f"{name} must be a finite nonnegative number, got {v}")


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float = 0.0
    b: float = 1.0

    continuous = True

    def __post_init__(self):
        _check_nonneg("a", self.a)
        if not (math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"Uniform requires a < b, got a={self.a}, b={self.b}")

    def sample(self, rng, size=None):
        return rng.uniform(self.a, self.b, size)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)[()]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)[()]

    def ppf(self, q):
        return self.a + q * (self.b - self.a)

    def support(self):
        return (self.a, self.b)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def moment(self, r):
        return (self.b ** (r + 1) - self.a ** (r + 1)) / ((r + 1) * (self.b - self.a))

    def is_standard(self) -> bool:
        return self.a == 0.0 and self.b == 1.0

    def label(self):
        return f"uniform({self.a:g},{self.b:g})"

    def to_dict(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float = 1.0

    continuous = True

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"Exponential requires rate > 0, got {self.rate}")

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)[()]

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)[()]

    def ppf(self, q):
        return -math.log1p(-q) / self.rate

    def support(self):
        return (0.0, math.inf)

    def mean(self):
        return 1.0 / self.rate

    def moment(self, r):
        return math.factorial(r) / self.rate**r

    def label(self):
        return f"exponential({self.rate:g})"

    def to_dict(self):
        return {"kind": "exponential", "rate": self.rate}


class _Discrete(Distribution):
    continuous = False

    @property
    def atoms(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def probs(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng, size=None):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
        return self.atoms[np.minimum(idx, len(cum) - 1)][()]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        out = cum[np.searchsorted(self.atoms, x, side="right")]
        return np.minimum(out, 1.0)[()]

    def pmf(self, x: float) -> float:
        hits = np.nonzero(self.atoms == x)[0]
        return float(self.probs[hits[0]]) if hits.size else 0.0

    def support(self):
        return (float(self.atoms[0]), float(self.atoms[-1]))

    def grid(self, points):
        return self.atoms.copy()

    def mean(self):
        return float(np.dot(self.atoms, self.probs))

    def moment(self, r):
        return float(np.dot(self.atoms**r, self.probs))

    def ppf(self, q):
        cum = np.cumsum(self.probs)
        return float(self.atoms[min(np.searchsorted(cum, q - PROB_TOL), len(cum) - 1)])


@dataclass(frozen=True)
class PointMass(_Discrete):
    value: float = 1.0

    def __post_init__(self):
        _check_nonneg("value", self.value)

    @property
    def atoms(self):
        return np.array([self.value], dtype=float)

    @property
    def probs(self):
        return np.array([1.0])

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def mean(self):
        return float(self.value)

    def moment(self, r):
        return float(self.value) ** r

    def label(self):
        return f"point({self.value:g})"

    def to_dict(self):
        return {"kind": "point_mass", "value": self.value}


@dataclass(frozen=True)
class TwoPoint(_Discrete):
    """``hi`` with probability ``p_hi``, otherwise ``lo``."""

    lo: float = 0.0
    hi: float = 1.0
    p_hi: float = 0.5

    def __post_init__(self):
        _check_nonneg("lo", self.lo)
        if not (math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError(f"TwoPoint requires lo < hi, got lo={self.lo}, hi={self.hi}")
        if not (0.0 <= self.p_hi <= 1.0):
            raise ValueError(f"p_hi must be a probability, got {self.p_hi}")

    @property
    def atoms(self):
        return np.array([self.lo, self.hi], dtype=float)

    @property
    def probs(self):
        return np.array([1.0 - self.p_hi, self.p_hi])

    def sample(self, rng, size=None):
        hit = rng.random(size) < self.p_hi
        return np.where(hit, self.hi, self.lo)[()]

    def label(self):
        return f"two_point({self.lo:g},{self.hi:g},{self.p_hi:g})"

    def to_dict(self):
        return {"kind": "two_point", "lo": self.lo, "hi": self.hi, "p_hi": self.p_hi}


@dataclass(frozen=True)
class FiniteDiscrete(_Discrete):
    support_values: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        sv = tuple(float(v) for v in self.support_values)
        pv = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "support_values", sv)
        object.__setattr__(self, "probabilities", pv)
        if not sv or len(sv) != len(pv):
            raise ValueError("support and probabilities must be nonempty and of equal length")
        for v in sv:
            _check_nonneg("support value", v)
        if any(b <= a for a, b in zip(sv, sv[1:])):
            raise ValueError("support must be strictly increasing")
        if any(p < 0 for p in pv) or abs(math.fsum(pv) - 1.0) > PROB_TOL:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @property
    def atoms(self):
        return np.array(self.support_values)

    @property
    def probs(self):
        return np.array(self.probabilities)

    def label(self):
        return "discrete(" + ",".join(f"{v:g}:{p:g}" for v, p in zip(self.support_values, self.probabilities)) + ")"

    def to_dict(self):
        return {"kind": "discrete", "support": list(self.support_values), "probs": list(self.probabilities)}


def hazard_rate(d: Distribution, x: float) -> float:
    """Hazard rate of ``d`` at ``x``.

    Returns ``math.inf`` where the survival function vanishes.  For discrete
    laws ``x`` must be one of the atoms.
    """
    if d.continuous:
        if isinstance(d, Exponential):
            return d.rate if x >= 0 else 0.0
        surv = 1.0 - float(d.cdf(x))
        if surv <= 0.0:
            return math.inf
        return float(d.pdf(x)) / surv
    mass = d.pmf(x)
    if mass == 0.0:
        raise ValueError(f"{x} is not an atom of {d.label()}")
    tail = float(np.sum(d.probs[d.atoms >= x]))
    return mass / tail


def is_mhr_numeric(d: Distribution, grid_points: int = 200, tol: float = 1e-9) -> bool:
    """Check that the hazard rate is nondecreasing on a grid over the support
    (on the atoms, for discrete laws)."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    h = np.array([hazard_rate(d, float(x)) for x in d.grid(grid_points)])
    return bool(np.all(np.diff(h) >= -tol))


def smooth(d: Distribution, eps: float) -> Distribution:
    """Replace a point mass by a narrow uniform around it (clamped at 0)."""
    if not isinstance(d, PointMass):
        return d
    if eps <= 0:
        raise ValueError("eps must be positive")
    return Uniform(max(0.0, d.value - eps), d.value + eps)


_KINDS = {
    "point_mass": lambda s: PointMass(float(s["value"])),
    "uniform": lambda s: Uniform(float(s.get("a", 0.0)), float(s.get("b", 1.0))),
    "exponential": lambda s: Exponential(float(s.get("rate", s.get("lambda", 1.0)))),
    "two_point": lambda s: TwoPoint(float(s.get("lo", 0.0)), float(s.get("hi", 1.0)), float(s["p_hi"])),
    "discrete": lambda s: FiniteDiscrete(tuple(s["support"]), tuple(s["probs"])),
}


def from_dict(spec: dict[str, Any]) -> Distribution:
    """Build a distribution from its JSON form, e.g. ``{"kind": "uniform", "a": 0, "b": 1}``."""
    try:
        kind = spec["kind"]
        return _KINDS[kind](spec)
    except KeyError as exc:
        raise ValueError(f"bad distribution spec {spec!r}: missing or unknown {exc}") from None
