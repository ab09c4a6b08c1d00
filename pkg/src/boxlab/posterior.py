"""Posterior mean of a reward given one Gaussian-noisy observation.

For ``X ~ D`` and ``Y = X + N(0, sigma^2)`` the posterior mean is

    E[X | Y = y] = int x f(x) phi((y - x)/sigma) dx / int f(x) phi((y - x)/sigma) dx

with sums replacing integrals on the atoms of ``D``. All weights are
handled in log space, so observations many standard deviations away from
the support do not underflow.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from ._numeric import mills_ratio, quad
from .distributions import (
    Exponential,
    HalfNormal,
    PointMass,
    RewardDistribution,
    Truncated,
)
from .errors import ConfigError, DegeneratePosteriorError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# relative weight below which the tails of the window are ignored
_TAIL_CUTOFF = 1e-14


@dataclass(frozen=True)
class PosteriorQuery:
    distribution: RewardDistribution
    sigma: float
    y: float
    tolerance: float = 1e-8

    def evaluate(self) -> float:
        return posterior_mean(self.distribution, self.sigma, self.y, rtol=self.tolerance)


def _in_support(dist: RewardDistribution, y: float) -> bool:
    lo, hi = dist.support()
    if not (lo - 1e-12 <= y <= hi + 1e-12):
        return False
    if dist.continuous_mass() > 0:
        return True
    locs = dist.atoms()[0]
    return bool(np.any(np.abs(locs - y) <= 1e-12 * max(1.0, abs(y))))


def nearest_support_point(dist: RewardDistribution, y: float) -> float:
    """Fallback answer for numerically degenerate queries."""
    lo, hi = dist.support()
    if dist.continuous_mass() > 0:
        return float(min(max(y, lo), hi))
    locs = dist.atoms()[0]
    return float(locs[np.argmin(np.abs(locs - y))])


def _continuous_part(dist: RewardDistribution, sigma: float, y: float, rtol: float):
    """Return ``(shift, B, A)`` with the continuous integrals scaled by ``exp(-shift)``."""
    lo, hi = dist.support()
    inv2s2 = 0.5 / (sigma * sigma)

    def logw(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.asarray(dist.logpdf(x), dtype=float) - (y - x) ** 2 * inv2s2

    # the posterior mode lies between the observation and the bulk of the prior
    q_lo = max(lo, float(dist.quantile(1e-12)))
    q_hi = min(hi, float(dist.isf(1e-12)))
    a = max(lo, min(y, q_lo) - 10.0 * sigma)
    b = min(hi, max(y, q_hi) + 10.0 * sigma)
    if not a < b:
        return -math.inf, 0.0, 0.0
    grid = np.linspace(a, b, 2049)
    lg = logw(grid)
    lg = np.where(np.isnan(lg), -np.inf, lg)
    i = int(np.argmax(lg))
    if not math.isfinite(lg[i]):
        return -math.inf, 0.0, 0.0
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    mode, shift = float(grid[i]), float(lg[i])
    if right > left:
        res = optimize.minimize_scalar(
            lambda t: -float(logw(t)), bounds=(left, right), method="bounded",
            options={"xatol": 1e-10 * max(1.0, abs(mode))},
        )
        if res.success and -res.fun > shift:
            mode, shift = float(res.x), float(-res.fun)

    # window: observation +- 10 sigma joined with the neighbourhood of the mode,
    # then widened while the edge weight is still noticeable
    lo_w = max(lo, min(y - 10.0 * sigma, mode - 12.0 * sigma))
    hi_w = min(hi, max(y + 10.0 * sigma, mode + 12.0 * sigma))
    lo_w = min(lo_w, mode)
    hi_w = max(hi_w, mode)
    step = 12.0 * sigma
    for _ in range(100):
        if lo_w > lo and float(logw(lo_w)) - shift > math.log(_TAIL_CUTOFF):
            lo_w = max(lo, lo_w - step)
        elif hi_w < hi and float(logw(hi_w)) - shift > math.log(_TAIL_CUTOFF):
            hi_w = min(hi, hi_w + step)
        else:
            break
        step *= 2.0

    def w(t: float) -> float:
        v = float(logw(t)) - shift
        return math.exp(v) if v > -745.0 else 0.0

    pts = [mode, *dist.atoms()[0], *(b for b in dist.breakpoints() if lo_w < b < hi_w)]
    eps = min(rtol * 1e-3, 1e-10)
    B = quad(w, lo_w, hi_w, points=pts, epsrel=eps)
    A = quad(lambda t: t * w(t), lo_w, hi_w, points=pts, epsrel=eps)
    return shift, B, A


def _log_components(dist: RewardDistribution, sigma: float, y: float, rtol: float):
    """Log numerator and log denominator of the posterior mean."""
    log_num = -math.inf
    log_den = -math.inf
    locs, probs = dist.atoms()
    if locs.size:
        keep = probs > 0
        locs, probs = locs[keep], probs[keep]
        lw = np.log(probs) - (y - locs) ** 2 / (2.0 * sigma * sigma)
        log_den = float(logsumexp(lw))
        pos = locs > 0
        if np.any(pos):
            log_num = float(logsumexp(lw[pos] + np.log(locs[pos])))
    if dist.continuous_mass() > 1e-15:
        shift, B, A = _continuous_part(dist, sigma, y, rtol)
        if B > 0:
            log_den = float(np.logaddexp(log_den, shift + math.log(B)))
        if A > 0:
            log_num = float(np.logaddexp(log_num, shift + math.log(A)))
    return log_num, log_den


def posterior_mean(dist: RewardDistribution, sigma: float, y: float, rtol: float = 1e-8) -> float:
    """``E[X | X + N(0, sigma^2) = y]`` for ``X ~ dist`` by quadrature.

    ``sigma = 0`` returns ``y``, which must then lie in the support. Raises
    DegeneratePosteriorError when the likelihood vanishes on the whole
    support; see :func:`posterior_mean_or_fallback`.
    """
    sigma = float(sigma)
    y = float(y)
    if not (sigma >= 0 and math.isfinite(sigma)) or not math.isfinite(y):
        raise ConfigError(f"need finite sigma >= 0 and finite y, got sigma={sigma}, y={y}")
    if sigma == 0:
        if not _in_support(dist, y):
            raise ConfigError(f"exact observation y={y} lies outside the support")
        return y
    if isinstance(dist, PointMass):
        return dist.value
    log_num, log_den = _log_components(dist, sigma, y, rtol)
    if not math.isfinite(log_den):
        raise DegeneratePosteriorError(f"likelihood vanishes on the support (sigma={sigma}, y={y})")
    lo, hi = dist.support()
    return float(min(max(math.exp(log_num - log_den), lo), hi))


def posterior_mean_or_fallback(
    dist: RewardDistribution, sigma: float, y: float, rtol: float = 1e-8
) -> tuple[float, bool]:
    """Posterior mean, or the nearest support point for degenerate queries.

    The second element reports whether the fallback was used.
    """
    try:
        return posterior_mean(dist, sigma, y, rtol), False
    except DegeneratePosteriorError:
        return nearest_support_point(dist, y), True


def posterior_mean_halfnormal(sigma, y, scale: float = 1.0):
    """Closed-form posterior mean under a half-normal prior.

    For the unit half-normal, with ``v = sigma^2 + 1``,
    ``E[X | y] = y/v + M(z) sigma/sqrt(v)`` where ``z = -y/(sigma sqrt(v))``
    and ``M`` is the Mills ratio ``phi/(1 - Phi)``. Other scales follow by
    rescaling. Entries with ``sigma = 0`` return ``y``. Vectorised.
    """
    sigma = np.asarray(sigma, dtype=float) / scale
    yy = np.asarray(y, dtype=float) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        v = sigma * sigma + 1.0
        s = sigma / np.sqrt(v)
        m = yy / v
        val = m + s * mills_ratio(-m / s)
    out = np.where(sigma > 0, np.maximum(val, 0.0), yy) * scale
    return float(out) if out.ndim == 0 else out


def posterior_mean_exponential(sigma, y, rate: float = 1.0):
    """Closed-form posterior mean under an exponential prior.

    The posterior is ``N(y - rate sigma^2, sigma^2)`` truncated to
    ``[0, inf)``, so ``E[X | y] = mu + sigma phi(mu/sigma)/Phi(mu/sigma)``.
    Vectorised; ``sigma = 0`` returns ``y``.
    """
    sigma = np.asarray(sigma, dtype=float)
    yy = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = yy - rate * sigma * sigma
        val = mu + sigma * mills_ratio(-mu / sigma)
    out = np.where(sigma > 0, np.maximum(val, 0.0), yy)
    return float(out) if out.ndim == 0 else out


def posterior_upper_bound_halfnormal(sigma, y):
    """``sqrt(2/pi) + max(0, y / (sigma^2 + 1))`` (unit half-normal prior)."""
    sigma = np.asarray(sigma, dtype=float)
    yy = np.asarray(y, dtype=float)
    out = SQRT_2_OVER_PI + np.maximum(0.0, yy / (sigma * sigma + 1.0))
    return float(out) if out.ndim == 0 else out


def truncated_posterior_mean(
    dist: RewardDistribution, upper: float, sigma: float, y: float, rtol: float = 1e-8
) -> float:
    """Posterior mean of ``D`` conditioned on ``D <= upper``."""
    return posterior_mean(Truncated(dist, upper), sigma, y, rtol)


def has_closed_form(dist: RewardDistribution) -> bool:
    return isinstance(dist, (HalfNormal, Exponential))


class PosteriorEngine:
    """Vectorised posterior means for one prior, with an optional memo.

    Half-normal and exponential priors use closed forms; purely atomic priors
    use exact weighted sums; anything else goes through quadrature, memoised
    on ``(sigma, y rounded to 1e-9)``. Memoised values are computed at the
    rounded observation so they depend only on the key, which keeps results
    independent of evaluation order across threads.
    """

    def __init__(self, dist: RewardDistribution, rtol: float = 1e-8, memo: bool = True):
        self.dist = dist
        self.rtol = rtol
        self.memo = memo
        self._cache: dict[tuple[float, float], tuple[float, bool]] = {}
        self._lock = threading.Lock()
        self.fallbacks = 0

    def __call__(self, sigma: np.ndarray, y: np.ndarray) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        y = np.asarray(y, dtype=float)
        dist = self.dist
        if isinstance(dist, HalfNormal):
            return np.asarray(posterior_mean_halfnormal(sigma, y, dist.scale), dtype=float)
        if isinstance(dist, Exponential):
            return np.asarray(posterior_mean_exponential(sigma, y, dist.rate), dtype=float)
        out = np.array(y, dtype=float, copy=True)
        noisy = sigma > 0
        if not np.any(noisy):
            return out
        if dist.continuous_mass() <= 1e-15:
            out[noisy] = self._atomic(sigma[noisy], y[noisy])
            return out
        for i in np.flatnonzero(noisy):
            out[i] = self._scalar(float(sigma[i]), float(y[i]))
        return out

    def _atomic(self, sigma: np.ndarray, y: np.ndarray) -> np.ndarray:
        locs, probs = self.dist.atoms()
        keep = probs > 0
        locs, probs = locs[keep], probs[keep]
        lw = np.log(probs)[None, :] - (y[:, None] - locs[None, :]) ** 2 / (
            2.0 * sigma[:, None] ** 2
        )
        lw -= lw.max(axis=1, keepdims=True)
        w = np.exp(lw)
        return (w @ locs) / w.sum(axis=1)

    def _scalar(self, sigma: float, y: float) -> float:
        if not self.memo:
            val, fell_back = posterior_mean_or_fallback(self.dist, sigma, y, self.rtol)
            if fell_back:
                with self._lock:
                    self.fallbacks += 1
            return val
        key = (sigma, round(y, 9))
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            hit = posterior_mean_or_fallback(self.dist, sigma, key[1], self.rtol)
            with self._lock:
                if key not in self._cache:
                    self._cache[key] = hit
                    if hit[1]:
                        self.fallbacks += 1
        return hit[0]
