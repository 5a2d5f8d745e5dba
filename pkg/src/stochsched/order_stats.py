"""Order statistics of processing-time laws.

Notation: ``min_of_n`` is the minimum of ``n`` i.i.d. draws and
``max_of_mins(n, m)`` the maximum of ``m`` independent such minima.  Closed
forms exist for uniform, exponential and point-mass laws; everything else
goes through :func:`monte_carlo_order_stat`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, Exponential, PointMass, Uniform, hazard_rate
from .estimates import EstimateReport
from .rng import as_stream, chunk_sizes

EULER_GAMMA = 0.5772156649015329
HARMONIC_DIRECT_LIMIT = 10**6
# elements per Monte Carlo chunk
_CHUNK_ELEMENTS = 2**22


class NoClosedFormError(ValueError):
    """Raised when a closed form is requested for an unsupported law."""


def harmonic(m: int) -> float:
    """H_m by direct summation up to 10**6, Euler-Maclaurin (approximate) beyond."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 0.0
    if m <= HARMONIC_DIRECT_LIMIT:
        # smallest terms first
        return float(np.sum(1.0 / np.arange(m, 0, -1, dtype=float)))
    return math.log(m) + EULER_GAMMA + 1.0 / (2 * m)


def log_beta(x: float, y: float) -> float:
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def beta(x: float, y: float) -> float:
    return math.exp(log_beta(x, y))


def _no_closed_form(dist):
    return NoClosedFormError(
        f"no closed form for {dist.label()}; use monte_carlo_order_stat instead"
    )


def expect_min_of_n(dist: Distribution, n: int) -> float:
    """E[min of n draws]."""
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(dist, PointMass):
        return dist.value
    if isinstance(dist, Exponential):
        return 1.0 / (dist.rate * n)
    if isinstance(dist, Uniform):
        return dist.a + (dist.b - dist.a) / (n + 1)
    raise _no_closed_form(dist)


def expect_min_sq_of_n(dist: Distribution, n: int) -> float:
    """E[(min of n draws)^2]."""
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(dist, PointMass):
        return dist.value**2
    if isinstance(dist, Exponential):
        return 2.0 / (dist.rate * n) ** 2
    if isinstance(dist, Uniform):
        a, w = dist.a, dist.b - dist.a
        return a * a + 2 * a * w / (n + 1) + w * w * 2.0 / ((n + 1) * (n + 2))
    raise _no_closed_form(dist)


def expect_max_of_mins(dist: Distribution, n: int, m: int) -> float:
    """E[max of m independent minima of n draws].

    Uniform on [0,1]: ``1 - m B(m, 1 + 1/n)``; exponential: ``H_m / (rate n)``.
    A general uniform is handled by the affine map from [0,1].
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if isinstance(dist, PointMass):
        return dist.value
    if isinstance(dist, Exponential):
        return harmonic(m) / (dist.rate * n)
    if isinstance(dist, Uniform):
        standard = 1.0 - math.exp(math.log(m) + log_beta(m, 1.0 + 1.0 / n))
        return dist.a + (dist.b - dist.a) * standard
    raise _no_closed_form(dist)


def stretch_factor(dist: Distribution, n: int) -> float:
    """Ratio E[max of n minima of n draws] / E[min of n draws]."""
    if isinstance(dist, PointMass):
        raise _no_closed_form(dist)
    return expect_max_of_mins(dist, n, n) / expect_min_of_n(dist, n)


def _mins_generic(dist, n, shape, rng):
    return dist.sample(rng, shape + (n,)).min(axis=-1)


def _mins_inverse(dist, n, shape, rng):
    if isinstance(dist, Exponential):
        return rng.exponential(1.0 / (dist.rate * n), shape)
    # min of n uniforms on [a, b] is a + (b - a)(1 - V^(1/n))
    v = rng.random(shape)
    return dist.a + (dist.b - dist.a) * -np.expm1(np.log(v) / n)


def monte_carlo_order_stat(
    dist: Distribution,
    n: int,
    m: int,
    trials: int,
    rng,
    method: str = "auto",
) -> EstimateReport:
    """Estimate E[max of m minima of n draws] (``m=1`` gives E[min of n]).

    ``method="generic"`` draws ``n`` values and takes the minimum;
    ``"inverse"`` samples the minimum directly (uniform and exponential
    only); ``"auto"`` picks ``inverse`` when it applies.
    """
    if n < 1 or m < 1 or trials < 1:
        raise ValueError("n, m and trials must be positive")
    rng = as_stream(rng)
    fast_ok = isinstance(dist, (Uniform, Exponential))
    if method == "auto":
        method = "inverse" if fast_ok else "generic"
    if method == "inverse" and not fast_ok:
        raise ValueError(f"no inverse-cdf fast path for {dist.label()}")
    if method not in ("inverse", "generic"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(dist, PointMass):
        return EstimateReport.exact(dist.value, rng.seed, trials)

    draw = _mins_inverse if method == "inverse" else _mins_generic
    per_trial = m * (1 if method == "inverse" else n)
    out = []
    for k, size in enumerate(chunk_sizes(trials, _CHUNK_ELEMENTS // per_trial)):
        mins = draw(dist, n, (size, m), rng.child(k))
        out.append(mins.max(axis=1))
    return EstimateReport.from_samples(np.concatenate(out), rng.seed)


@dataclass(frozen=True)
class MomentCheck:
    lhs: float
    rhs: float
    holds: bool


def moment_inequality_check(dist: Distribution, r: int, trials: int, rng) -> MomentCheck:
    """Compare E[X^r] against r! E[X]^r on one shared sample.

    ``holds`` allows a slack of three relative standard errors of the
    comparison (delta method on both sides).
    """
    if r < 1 or trials < 2:
        raise ValueError("r must be >= 1 and trials >= 2")
    rng = as_stream(rng)
    x = np.asarray(dist.sample(rng, trials), dtype=float)
    xr = x**r
    lhs = float(xr.mean())
    mu = float(x.mean())
    rhs = math.factorial(r) * mu**r
    rel_lhs = xr.std(ddof=1) / math.sqrt(trials) / lhs if lhs > 0 else 0.0
    rel_mu = x.std(ddof=1) / math.sqrt(trials) / mu if mu > 0 else 0.0
    rel_se = math.hypot(rel_lhs, r * rel_mu)
    return MomentCheck(lhs, rhs, lhs <= rhs * (1.0 + 3.0 * rel_se))


def first_order_stat_mhr_check(
    dist: Distribution, n: int, grid_points: int = 200, tol: float = 1e-9
) -> bool:
    """Is the minimum of ``n`` draws MHR?  Its hazard is ``n`` times that of
    ``dist``, evaluated on the same grid."""
    if not dist.continuous:
        raise ValueError("first-order-statistic MHR check needs a continuous law")
    if n < 1:
        raise ValueError("n must be positive")
    h = np.array([n * hazard_rate(dist, float(x)) for x in dist.grid(grid_points)])
    return bool(np.all(np.diff(h) >= -tol))
