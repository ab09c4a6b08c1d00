"""Noise-regime classification and adversarial noise profiles.

Four regimes are distinguished by comparing one pivot entry of the sorted
profile against a threshold built from an expected order statistic:

* small noise at ``c``:      ``sigma_(cn)  <= E[D_(cn:cn)] / (5 sqrt(2 ln n))``
* small noise, MHR ``D``:    ``sigma_(n^c) <= E[D_(n^c:n^c)] / (18 sqrt(2 c ln n))``
* medium noise at ``c``:     ``sigma_(n^c) >  E[D_(n^c:n^c)] / (18 c sqrt(2 ln n))``
* large noise at ``c``:      ``sigma_(cn)  >  E[D_(cn:cn)] sqrt(ln n) / ln(cn)``

Pivot positions are rounded half up and clamped to ``[1, n]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from ._numeric import round_half_up
from .distributions import MaxOf, RewardDistribution
from .errors import ConfigError
from .instance import NoiseProfile
from .orderstats import alpha_quantile, beta_threshold, order_stat_max_mean

# coefficient of the small-noise tier in the linear-policy construction
SIGMA_S_COEF = 37.0 / (9.0 * math.sqrt(2.0))
DEFAULT_C_S_EXPONENT = 1.0 / 5626.0
DEFAULT_ALPHA_EXPONENT = 1.0 / 10000.0
# desk-scale constants for the linear construction
SCALED_LINEAR_OVERRIDES = {"c_s_exponent": 0.3, "alpha_exponent": 0.5}


def _pivot(value: float, n: int) -> int:
    return min(max(round_half_up(value), 1), n)


@dataclass
class RegimeReport:
    """Membership flags for one ``(D, n, c, profile)`` with the numbers behind them.

    ``small_noise_mhr`` is ``None`` when ``D`` is not MHR; ``large_noise`` is
    ``None`` (unclassifiable) when ``cn < 3``.
    """

    n: int
    c: float
    small_noise: bool
    small_noise_mhr: bool | None
    medium_noise: bool
    large_noise: bool | None
    pivot_linear: int
    pivot_power: int
    sigma_linear: float
    sigma_power: float
    threshold_small: float
    threshold_small_mhr: float | None
    threshold_medium: float
    threshold_large: float | None
    mhr: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def classify(dist: RewardDistribution, n: int, c: float, profile: NoiseProfile) -> RegimeReport:
    """Evaluate all four regime memberships at ``c``."""
    if not 0.0 < c <= 1.0:
        raise ConfigError(f"c must lie in (0, 1], got {c}")
    n = int(n)
    if n < 2:
        raise ConfigError("classification needs n >= 2")
    if profile.n != n:
        raise ConfigError(f"profile has {profile.n} boxes, expected {n}")
    sigma = profile.sigma
    ln_n = math.log(n)
    k_lin = _pivot(c * n, n)
    k_pow = _pivot(n**c, n)
    e_lin = order_stat_max_mean(dist, k_lin)
    e_pow = order_stat_max_mean(dist, k_pow)
    s_lin = float(sigma[k_lin - 1])
    s_pow = float(sigma[k_pow - 1])

    thr_small = e_lin / (5.0 * math.sqrt(2.0 * ln_n))
    thr_medium = e_pow / (18.0 * c * math.sqrt(2.0 * ln_n))
    mhr = bool(dist.is_mhr())
    notes = []
    thr_mhr = None
    small_mhr = None
    if mhr:
        thr_mhr = e_pow / (18.0 * math.sqrt(2.0 * c * ln_n))
        small_mhr = s_pow <= thr_mhr
    else:
        notes.append("distribution is not MHR; small-noise MHR regime not evaluated")
    thr_large = None
    large = None
    if c * n < 3.0:
        notes.append("cn < 3: large-noise regime unclassifiable")
    else:
        thr_large = e_lin * math.sqrt(ln_n) / math.log(k_lin)
        large = s_lin > thr_large
    return RegimeReport(
        n=n, c=float(c),
        small_noise=s_lin <= thr_small,
        small_noise_mhr=small_mhr,
        medium_noise=s_pow > thr_medium,
        large_noise=large,
        pivot_linear=k_lin, pivot_power=k_pow,
        sigma_linear=s_lin, sigma_power=s_pow,
        threshold_small=thr_small, threshold_small_mhr=thr_mhr,
        threshold_medium=thr_medium, threshold_large=thr_large,
        mhr=mhr, notes=notes,
    )


@dataclass
class AdversarialConstruction:
    """A noise profile built to defeat a policy family, with its derived constants."""

    kind: str
    n: int
    distribution: RewardDistribution
    params: dict[str, Any]
    overrides: dict[str, Any]
    profile: NoiseProfile

    @property
    def constants(self) -> str:
        return "scaled" if self.overrides else "default"

    def to_config(self) -> dict[str, Any]:
        cfg: dict[str, Any] = {"construction": self.kind, "n": self.n}
        if self.overrides:
            cfg["overrides"] = dict(self.overrides)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "constants": self.constants,
            "distribution": self.distribution.to_config(),
            "overrides": dict(self.overrides),
            "params": dict(self.params),
            "profile": self.profile.to_config(),
        }


def _check_overrides(overrides: dict | None, allowed: set[str]) -> dict:
    overrides = dict(overrides or {})
    extra = set(overrides) - allowed
    if extra:
        raise ConfigError(f"unknown overrides {sorted(extra)}; allowed: {sorted(allowed)}")
    return overrides


def construct_naive_adversary(
    dist: RewardDistribution, n: int, overrides: dict | None = None
) -> AdversarialConstruction:
    """Exact boxes plus a few very noisy ones that lure the naive policy.

    ``n - round(c_b)`` boxes have no noise and ``round(c_b)`` boxes have
    ``sigma_b``, with ``c_b = 6 ln n`` and
    ``sigma_b = 6 beta_(n^2)(D_(n:n)) sqrt(ln n)``. Both may be overridden.
    """
    overrides = _check_overrides(overrides, {"c_b", "sigma_b"})
    n = int(n)
    if n < 2:
        raise ConfigError("naive adversary needs n >= 2")
    ln_n = math.log(n)
    c_b = float(overrides.get("c_b", 6.0 * ln_n))
    count = round_half_up(c_b)
    if count >= n:
        raise ConfigError(f"round(c_b) = {count} >= n = {n}: construction undefined")
    if count < 0:
        raise ConfigError("c_b must be non-negative")
    params: dict[str, Any] = {"c_b": c_b, "large_count": count, "exact_count": n - count}
    if "sigma_b" in overrides:
        sigma_b = float(overrides["sigma_b"])
    else:
        beta = beta_threshold(MaxOf(dist, n), float(n) ** 2)
        params["beta_max_n2"] = beta
        sigma_b = 6.0 * beta * math.sqrt(ln_n)
    params["sigma_b"] = sigma_b
    profile = NoiseProfile.from_blocks([(n - count, 0.0), (count, sigma_b)])
    return AdversarialConstruction("naive-adversary", n, dist, params, overrides, profile)


def construct_linear_adversary(
    dist: RewardDistribution, n: int, overrides: dict | None = None
) -> AdversarialConstruction:
    """One exact box, ``c_s`` mildly noisy boxes and the rest very noisy.

    ``c_s = n^(1/5626)``,
    ``sigma_s = 37/(9 sqrt 2) E[D_(c_s:c_s)] / sqrt(ln n)`` and
    ``sigma_b = 6 alpha_(n^(1/10000))(D_(n-c_s:n-c_s)) sqrt(ln n)``.
    Overrides: ``c_s`` (count) or ``c_s_exponent``, ``sigma_s``, ``sigma_b``,
    ``alpha_exponent``. See ``SCALED_LINEAR_OVERRIDES`` for desk-scale values.
    """
    overrides = _check_overrides(
        overrides, {"c_s", "c_s_exponent", "sigma_s", "sigma_b", "alpha_exponent"}
    )
    if "c_s" in overrides and "c_s_exponent" in overrides:
        raise ConfigError("give at most one of c_s and c_s_exponent")
    n = int(n)
    if n < 3:
        raise ConfigError("linear adversary needs n >= 3")
    if not dist.is_mhr():
        raise ConfigError("linear adversary requires an MHR distribution")
    ln_n = math.log(n)
    if "c_s" in overrides:
        c_s = float(overrides["c_s"])
    else:
        c_s = float(n) ** float(overrides.get("c_s_exponent", DEFAULT_C_S_EXPONENT))
    count = max(round_half_up(c_s), 1)
    if count + 2 > n:
        raise ConfigError(f"c_s + 2 = {count + 2} > n = {n}: construction undefined")
    a_exp = float(overrides.get("alpha_exponent", DEFAULT_ALPHA_EXPONENT))
    params: dict[str, Any] = {"c_s": c_s, "small_count": count, "alpha_exponent": a_exp}
    if "sigma_s" in overrides:
        sigma_s = float(overrides["sigma_s"])
    else:
        sigma_s = SIGMA_S_COEF * order_stat_max_mean(dist, count) / math.sqrt(ln_n)
    if "sigma_b" in overrides:
        sigma_b = float(overrides["sigma_b"])
    else:
        alpha = alpha_quantile(MaxOf(dist, n - count), float(n) ** a_exp)
        params["alpha_max"] = alpha
        sigma_b = 6.0 * alpha * math.sqrt(ln_n)
    theta = math.sqrt(ln_n / 2.0)
    params.update(
        sigma_s=sigma_s,
        sigma_b=sigma_b,
        theta_star=theta,
        large_count=n - 1 - count,
        sigma_b_exceeds_theta_sigma_s=bool(sigma_b > theta * sigma_s),
    )
    profile = NoiseProfile.from_blocks([(1, 0.0), (count, sigma_s), (n - 1 - count, sigma_b)])
    return AdversarialConstruction("linear-adversary", n, dist, params, overrides, profile)


CONSTRUCTIONS = {
    "naive-adversary": construct_naive_adversary,
    "linear-adversary": construct_linear_adversary,
}


def build_construction(
    kind: str, dist: RewardDistribution, n: int, overrides: dict | None = None
) -> AdversarialConstruction:
    try:
        builder = CONSTRUCTIONS[kind]
    except KeyError:
        raise ConfigError(f"unknown construction {kind!r}; choose from {sorted(CONSTRUCTIONS)}")
    return builder(dist, n, overrides)


def exact_prefix_profile(n: int, exact: int, sigma_rest: float) -> NoiseProfile:
    """``exact`` noiseless boxes followed by ``n - exact`` boxes at ``sigma_rest``."""
    if not 0 <= exact <= n:
        raise ConfigError(f"need 0 <= exact <= n, got exact={exact}, n={n}")
    return NoiseProfile.from_blocks([(exact, 0.0), (n - exact, sigma_rest)])


__all__ = [
    "AdversarialConstruction",
    "RegimeReport",
    "SCALED_LINEAR_OVERRIDES",
    "build_construction",
    "classify",
    "construct_linear_adversary",
    "construct_naive_adversary",
    "exact_prefix_profile",
]
