"""Order statistics, quantile thresholds, hazard checks and Gaussian tails."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._numeric import normal_logcdf, normal_pdf, quad
from .distributions import (
    Exponential,
    MaxOf,
    PointMass,
    RewardDistribution,
    TwoPoint,
    Uniform,
)
from .errors import ConfigError, NumericalError


def _check_m(m: float) -> float:
    m = float(m)
    if not (m >= 1.0 and math.isfinite(m)):
        raise ConfigError(f"order-statistic index must be a finite number >= 1, got {m}")
    return m


def _breakpoints(dist: RewardDistribution, *extra: float) -> list[float]:
    pts = [float(a) for a in dist.atoms()[0]]
    pts.extend(float(e) for e in extra if math.isfinite(e))
    return pts


def _integral_of_sf(dist: RewardDistribution, x: float, m: float = 1.0) -> float:
    """``int_x^inf (1 - F(t)^m) dt`` for ``x >= 0``."""
    lo, hi = dist.support()
    if x >= hi:
        return 0.0
    total = 0.0
    if x < lo:
        total += lo - x  # integrand is exactly 1 below the support
        x = lo
    if lo == hi:
        return total

    def g(t: float) -> float:
        s = float(dist.sf(t))
        if s >= 1.0:
            return 1.0
        return -math.expm1(m * math.log1p(-s))

    end = hi
    if not math.isfinite(hi):
        end = float(dist.isf(min(1e-3 / m, 1e-17)))
    mid = float(dist.isf(min(1.0 / m, 0.5)))
    total += quad(g, x, end, points=_breakpoints(dist, mid, float(dist.isf(0.5 / m))))
    if end < hi:
        total += quad(g, end, math.inf)
    return total


def order_stat_max_mean(dist: RewardDistribution, m: float, method: str = "auto") -> float:
    """Expected maximum of ``m`` i.i.d. draws, ``int_0^inf (1 - F(x)^m) dx``.

    Closed forms are used for exponential, uniform, point-mass and two-point
    laws (and nested maxima); ``method="quadrature"`` forces the integral.
    Real ``m >= 1`` is accepted.
    """
    m = _check_m(m)
    if method not in ("auto", "quadrature"):
        raise ConfigError(f"unknown method {method!r}")
    if method == "auto":
        if isinstance(dist, MaxOf):
            return order_stat_max_mean(dist.base, dist.k * m)
        if isinstance(dist, Exponential):
            # generalised harmonic number H_m = digamma(m + 1) + Euler's gamma
            return float(special.digamma(m + 1.0) + np.euler_gamma) / dist.rate
        if isinstance(dist, Uniform):
            return dist.low + dist.width * m / (m + 1.0)
        if isinstance(dist, PointMass):
            return dist.value
        if isinstance(dist, TwoPoint):
            return -dist.value * math.expm1(m * math.log1p(-dist.p)) if dist.p < 1 else dist.value
    return _integral_of_sf(dist, 0.0, m)


def alpha_quantile(dist: RewardDistribution, m: float) -> float:
    """The ``1 - 1/m`` quantile, evaluated through the survival side."""
    m = _check_m(m)
    return float(dist.isf(1.0 / m))


def tail_contribution(dist: RewardDistribution, x: float) -> float:
    """``E[D; D > x] = x * P(D > x) + int_x^inf P(D > t) dt`` for ``x >= 0``."""
    x = max(float(x), 0.0)
    if isinstance(dist, Exponential):
        return (x + 1.0 / dist.rate) * math.exp(-dist.rate * x)
    if isinstance(dist, PointMass):
        return dist.value if x < dist.value else 0.0
    if isinstance(dist, TwoPoint):
        return dist.value * dist.p if x < dist.value else 0.0
    if isinstance(dist, Uniform):
        if x >= dist.high:
            return 0.0
        x = max(x, dist.low)
        return (dist.high - x) * (dist.high + x) / (2.0 * dist.width)
    return x * float(dist.sf(x)) + _integral_of_sf(dist, x)


def beta_threshold(dist: RewardDistribution, m: float, tol: float | None = None) -> float:
    """Smallest ``x`` whose upper-tail contribution is at most ``E[D] / m``.

    Found by bisection; the default absolute tolerance is ``1e-8 * E[D]``.
    The bracket starts at ``[0, isf(1e-9)]`` and is widened until it holds
    the root.
    """
    m = _check_m(m)
    mean = dist.mean()
    target = mean / m
    if tail_contribution(dist, 0.0) <= target:
        return 0.0
    if tol is None:
        tol = 1e-8 * mean
    lo = 0.0
    hi = float(dist.isf(1e-9))
    if not math.isfinite(hi) or hi <= 0:
        hi = 1.0
    for _ in range(200):
        if tail_contribution(dist, hi) <= target:
            break
        lo = hi
        hi = 2.0 * hi + 1.0
    else:
        raise NumericalError(f"could not bracket the tail threshold for m={m}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if tail_contribution(dist, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def gaussian_max_tail(m: float, sigma: float, t: float) -> float:
    """``P(max of m i.i.d. N(0, sigma^2) <= t) = Phi(t / sigma)^m``."""
    if sigma <= 0:
        return 1.0 if t >= 0 else 0.0
    return math.exp(m * float(normal_logcdf(t / sigma)))


def gaussian_max_log_cdf(log_m: float, sigma: float, t: float) -> float:
    """Log of ``Phi(t / sigma)^m`` given ``log m``; usable when ``m`` overflows."""
    if sigma <= 0:
        return 0.0 if t >= 0 else -math.inf
    z = t / sigma
    if z <= 0:
        e = log_m + math.log(-float(normal_logcdf(z)))
        return -math.inf if e > 709.0 else -math.exp(e)
    # log(-log Phi(z)) through the upper tail q = Phi(-z), which never underflows in log form
    lq = float(normal_logcdf(-z))
    q = math.exp(lq)
    log_neg_lc = lq if q < 1e-300 else lq + math.log(-math.log1p(-q) / q)
    e = log_m + log_neg_lc
    return -math.inf if e > 709.0 else -math.exp(e)


def gordon_bounds(t: float) -> tuple[float, float]:
    """Lower and upper bracket on ``Phi(t)`` for ``t > 0``.

    ``1 - phi(t)/t <= Phi(t) <= 1 - t phi(t)/(t^2 + 1)``.
    """
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    phi = float(normal_pdf(t))
    return 1.0 - phi / t, 1.0 - t * phi / (t * t + 1.0)


@dataclass
class HazardProfile:
    """Hazard rate on a grid and the resulting monotonicity verdict."""

    grid: np.ndarray
    hazard: np.ndarray
    is_mhr: bool
    rejected: list[tuple[float, str]] = field(default_factory=list)


def hazard_profile(
    dist: RewardDistribution, grid: np.ndarray | None = None, rtol: float = 1e-9
) -> HazardProfile:
    """Evaluate ``f / (1 - F)`` and check that it never decreases.

    Grid points where the survival function vanishes or the ratio is not
    finite are rejected and listed with a reason. Laws with atoms are not
    treated as having a monotone hazard rate.
    """
    if grid is None:
        p = np.linspace(1e-6, 1.0 - 1e-6, 400)
        grid = np.unique(np.asarray(dist.quantile(p), dtype=float))
    grid = np.asarray(grid, dtype=float)
    rejected: list[tuple[float, str]] = []
    if dist.continuous_mass() < 1.0:
        rejected.append((float("nan"), "distribution has atoms"))
        return HazardProfile(grid, np.full(grid.shape, np.nan), False, rejected)
    with np.errstate(invalid="ignore", over="ignore"):
        h = np.exp(np.asarray(dist.logpdf(grid), float) - np.asarray(dist.logsf(grid), float))
    sf = np.asarray(dist.sf(grid), dtype=float)
    ok = np.isfinite(h) & (sf > 0)
    for x in grid[~ok]:
        rejected.append((float(x), "survival function vanishes or hazard not finite"))
    kept = h[ok]
    if kept.size < 2:
        return HazardProfile(grid, h, False, rejected)
    scale = max(float(np.max(np.abs(kept))), 1e-300)
    verdict = bool(np.all(np.diff(kept) >= -rtol * scale))
    return HazardProfile(grid, h, verdict, rejected)
