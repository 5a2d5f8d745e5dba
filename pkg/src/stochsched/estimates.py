from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo estimate of an expectation.

    ``std_error`` is the sample standard deviation (ddof=1) over
    ``sqrt(trials)``; it is zero for a single trial or a constant sample.
    """

    mean: float
    std_error: float
    trials: int
    seed: int

    @classmethod
    def from_samples(cls, samples, seed: int) -> "EstimateReport":
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("cannot summarise an empty sample")
        if x.size == 1 or np.all(x == x[0]):
            return cls(float(x[0]) if x.size else 0.0, 0.0, int(x.size), int(seed))
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size), int(seed))

    @classmethod
    def exact(cls, value: float, seed: int = 0, trials: int = 1) -> "EstimateReport":
        return cls(float(value), 0.0, int(trials), int(seed))

    def within(self, target: float, k: float = 3.0) -> bool:
        """True when ``target`` lies within ``k`` standard errors of the mean."""
        if self.std_error == 0.0:
            return math.isclose(self.mean, target, rel_tol=1e-12, abs_tol=1e-12)
        return abs(self.mean - target) <= k * self.std_error

    def to_dict(self) -> dict:
        return asdict(self)
