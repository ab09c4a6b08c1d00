"""Reward distributions on [0, inf).

Every distribution exposes vectorised ``cdf``, ``sf``, ``pdf``, ``logpdf``,
``logsf``, ``quantile`` and ``isf`` plus ``mean``, ``support``, ``atoms``
and ``sample``. ``pdf`` is the density of the absolutely continuous part; any
point masses are reported by ``atoms``.

Configs are plain dicts of the form ``{"kind": <name>, <params>...}``; see
:func:`from_config`.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from ._numeric import quad
from .errors import ConfigError

_EMPTY = (np.empty(0), np.empty(0))


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _out(values: np.ndarray, like):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


class RewardDistribution(ABC):
    """Abstract law of a box reward."""

    kind: ClassVar[str] = ""

    @abstractmethod
    def cdf(self, x): ...

    @abstractmethod
    def sf(self, x): ...

    @abstractmethod
    def pdf(self, x): ...

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(x))

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(x))

    @abstractmethod
    def quantile(self, p): ...

    def isf(self, q):
        """Inverse survival function ``quantile(1 - q)``."""
        return self.quantile(1.0 - _arr(q))

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and probabilities of point masses (empty if none)."""
        return _EMPTY

    def breakpoints(self) -> tuple[float, ...]:
        """Points where the density is not smooth; used to split integrals."""
        return ()

    def continuous_mass(self) -> float:
        return 1.0 - float(np.sum(self.atoms()[1]))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return _arr(self.quantile(rng.random(size)))

    def is_mhr(self) -> bool:
        from .orderstats import hazard_profile

        return hazard_profile(self).is_mhr

    def to_config(self) -> dict[str, Any]:
        cfg: dict[str, Any] = {"kind": self.kind}
        for f in fields(self):  # type: ignore[arg-type]
            if f.init:
                cfg[f.name] = getattr(self, f.name)
        return cfg


@dataclass(frozen=True)
class Exponential(RewardDistribution):
    rate: float = 1.0
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ConfigError(f"exponential rate must be positive, got {self.rate}")

    def cdf(self, x):
        x = _arr(x)
        return _out(np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0), x)

    def sf(self, x):
        x = _arr(x)
        return _out(np.exp(-self.rate * np.maximum(x, 0.0)), x)

    def pdf(self, x):
        x = _arr(x)
        return _out(np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0), x)

    def logpdf(self, x):
        x = _arr(x)
        return _out(np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf), x)

    def logsf(self, x):
        x = _arr(x)
        return _out(-self.rate * np.maximum(x, 0.0), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(-np.log1p(-p) / self.rate, p)

    def isf(self, q):
        q = _arr(q)
        return _out(-np.log(q) / self.rate, q)

    def mean(self) -> float:
        return 1.0 / self.rate

    def support(self):
        return (0.0, math.inf)

    def sample(self, rng, size):
        return rng.standard_exponential(size) / self.rate

    def is_mhr(self) -> bool:
        return True


@dataclass(frozen=True)
class HalfNormal(RewardDistribution):
    """Law of ``|scale * Z|`` for standard normal ``Z``."""

    scale: float = 1.0
    kind: ClassVar[str] = "halfnormal"

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigError(f"halfnormal scale must be positive, got {self.scale}")

    def cdf(self, x):
        x = _arr(x)
        return _out(special.erf(np.maximum(x, 0.0) / (self.scale * math.sqrt(2.0))), x)

    def sf(self, x):
        x = _arr(x)
        return _out(special.erfc(np.maximum(x, 0.0) / (self.scale * math.sqrt(2.0))), x)

    def pdf(self, x):
        x = _arr(x)
        z = x / self.scale
        dens = math.sqrt(2.0 / math.pi) / self.scale * np.exp(-0.5 * z * z)
        return _out(np.where(x >= 0, dens, 0.0), x)

    def logpdf(self, x):
        x = _arr(x)
        z = x / self.scale
        val = 0.5 * math.log(2.0 / math.pi) - math.log(self.scale) - 0.5 * z * z
        return _out(np.where(x >= 0, val, -np.inf), x)

    def logsf(self, x):
        x = _arr(x)
        return _out(math.log(2.0) + special.log_ndtr(-np.maximum(x, 0.0) / self.scale), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(self.scale * special.ndtri(0.5 * (1.0 + p)), p)

    def isf(self, q):
        q = _arr(q)
        return _out(-self.scale * special.ndtri(0.5 * q), q)

    def mean(self) -> float:
        return self.scale * math.sqrt(2.0 / math.pi)

    def support(self):
        return (0.0, math.inf)

    def sample(self, rng, size):
        return np.abs(rng.standard_normal(size)) * self.scale

    def is_mhr(self) -> bool:
        return True


@dataclass(frozen=True)
class Uniform(RewardDistribution):
    low: float = 0.0
    high: float = 1.0
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (0.0 <= self.low < self.high < math.inf):
            raise ConfigError(f"uniform needs 0 <= low < high, got [{self.low}, {self.high}]")

    @property
    def width(self) -> float:
        return self.high - self.low

    def cdf(self, x):
        x = _arr(x)
        return _out(np.clip((x - self.low) / self.width, 0.0, 1.0), x)

    def sf(self, x):
        x = _arr(x)
        return _out(np.clip((self.high - x) / self.width, 0.0, 1.0), x)

    def pdf(self, x):
        x = _arr(x)
        inside = (x >= self.low) & (x <= self.high)
        return _out(np.where(inside, 1.0 / self.width, 0.0), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(self.low + p * self.width, p)

    def isf(self, q):
        q = _arr(q)
        return _out(self.high - q * self.width, q)

    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def support(self):
        return (self.low, self.high)

    def sample(self, rng, size):
        return rng.uniform(self.low, self.high, size)

    def is_mhr(self) -> bool:
        return True


@dataclass(frozen=True)
class PointMass(RewardDistribution):
    value: float = 0.0
    kind: ClassVar[str] = "pointmass"

    def __post_init__(self):
        if not (0.0 <= self.value < math.inf):
            raise ConfigError(f"pointmass value must be finite and >= 0, got {self.value}")

    def cdf(self, x):
        x = _arr(x)
        return _out(np.where(x >= self.value, 1.0, 0.0), x)

    def sf(self, x):
        x = _arr(x)
        return _out(np.where(x < self.value, 1.0, 0.0), x)

    def pdf(self, x):
        x = _arr(x)
        return _out(np.zeros_like(x), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(np.full_like(p, self.value), p)

    def isf(self, q):
        return self.quantile(q)

    def mean(self) -> float:
        return self.value

    def support(self):
        return (self.value, self.value)

    def atoms(self):
        return (np.array([self.value]), np.array([1.0]))

    def sample(self, rng, size):
        return np.full(size, self.value)

    def is_mhr(self) -> bool:
        return False


@dataclass(frozen=True)
class TwoPoint(RewardDistribution):
    """``value`` with probability ``p``, otherwise 0."""

    value: float = 1.0
    p: float = 0.5
    kind: ClassVar[str] = "twopoint"

    def __post_init__(self):
        if not (0.0 < self.value < math.inf):
            raise ConfigError(f"twopoint value must be positive, got {self.value}")
        if not (0.0 < self.p <= 1.0):
            raise ConfigError(f"twopoint p must lie in (0, 1], got {self.p}")

    def cdf(self, x):
        x = _arr(x)
        return _out(np.where(x < 0, 0.0, np.where(x < self.value, 1.0 - self.p, 1.0)), x)

    def sf(self, x):
        x = _arr(x)
        return _out(np.where(x < 0, 1.0, np.where(x < self.value, self.p, 0.0)), x)

    def pdf(self, x):
        x = _arr(x)
        return _out(np.zeros_like(x), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(np.where(p <= 1.0 - self.p, 0.0, self.value), p)

    def isf(self, q):
        q = _arr(q)
        return _out(np.where(q >= self.p, 0.0, self.value), q)

    def mean(self) -> float:
        return self.p * self.value

    def support(self):
        return (0.0, self.value)

    def atoms(self):
        if self.p == 1.0:
            return (np.array([self.value]), np.array([1.0]))
        return (np.array([0.0, self.value]), np.array([1.0 - self.p, self.p]))

    def sample(self, rng, size):
        return np.where(rng.random(size) < self.p, self.value, 0.0)

    def is_mhr(self) -> bool:
        return False


@dataclass(frozen=True)
class Tabulated(RewardDistribution):
    """Continuous law given by a monotone (PCHIP) interpolation of CDF values.

    ``x`` must be strictly increasing with ``x[0] >= 0``; ``cdf`` must be
    non-decreasing with ``cdf[0] == 0`` and ``cdf[-1] == 1``.
    """

    x: tuple = (0.0, 1.0)
    cdf_values: tuple = (0.0, 1.0)
    kind: ClassVar[str] = "tabulated"
    _interp: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        fs = np.asarray(self.cdf_values, dtype=float)
        if xs.ndim != 1 or xs.shape != fs.shape or xs.size < 2:
            raise ConfigError("tabulated x and cdf must be 1-d arrays of equal length >= 2")
        if xs[0] < 0 or np.any(np.diff(xs) <= 0) or not np.all(np.isfinite(xs)):
            raise ConfigError("tabulated x must be finite, strictly increasing and >= 0")
        if np.any(np.diff(fs) < 0) or abs(fs[0]) > 1e-12 or abs(fs[-1] - 1.0) > 1e-12:
            raise ConfigError("tabulated cdf must be non-decreasing from 0 to 1")
        object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "cdf_values", tuple(float(v) for v in fs))
        object.__setattr__(self, "_interp", PchipInterpolator(xs, fs, extrapolate=False))

    def cdf(self, x):
        x = _arr(x)
        lo, hi = self.support()
        inner = np.nan_to_num(self._interp(np.clip(x, lo, hi)))
        return _out(np.clip(np.where(x < lo, 0.0, np.where(x >= hi, 1.0, inner)), 0.0, 1.0), x)

    def sf(self, x):
        return _out(1.0 - _arr(self.cdf(x)), x)

    def pdf(self, x):
        x = _arr(x)
        lo, hi = self.support()
        d = np.nan_to_num(self._interp.derivative()(np.clip(x, lo, hi)))
        inside = (x >= lo) & (x <= hi)
        return _out(np.where(inside, np.maximum(d, 0.0), 0.0), x)

    def quantile(self, p):
        p = _arr(p)
        lo, hi = self.support()
        a = np.full(p.shape, lo)
        b = np.full(p.shape, hi)
        for _ in range(80):
            mid = 0.5 * (a + b)
            below = _arr(self.cdf(mid)) < p
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        return _out(b, p)

    def mean(self) -> float:
        lo, hi = self.support()
        return lo + quad(lambda t: float(self.sf(t)), lo, hi, points=self.x[1:-1])

    def support(self):
        return (self.x[0], self.x[-1])

    def breakpoints(self):
        return self.x

    def is_mhr(self, rtol: float = 1e-9) -> bool:
        """Judged on the table: cumulative hazard ``-log(1 - F)`` convex at the nodes.

        The interpolant's own hazard ripples between nodes, so checking it
        pointwise would reject tables of MHR laws.
        """
        xs = np.asarray(self.x)
        fs = np.asarray(self.cdf_values)
        keep = fs < 1.0
        if np.count_nonzero(keep) < 3:
            return True
        sf = 1.0 - fs[keep]
        H = -np.log(sf)
        dx = np.diff(xs[keep])
        slopes = np.diff(H) / dx
        # rounding in the stored CDF values perturbs H by about eps / (1 - F)
        err = 4 * np.finfo(float).eps / sf
        slope_err = (err[1:] + err[:-1]) / dx
        scale = max(float(np.max(np.abs(slopes))), 1e-300)
        tol = rtol * scale + slope_err[1:] + slope_err[:-1]
        return bool(np.all(np.diff(slopes) >= -tol))

    def to_config(self):
        return {"kind": self.kind, "x": list(self.x), "cdf": list(self.cdf_values)}


@dataclass(frozen=True)
class MaxOf(RewardDistribution):
    """Law of the maximum of ``k`` i.i.d. draws from ``base`` (``k >= 1`` real)."""

    base: RewardDistribution
    k: float
    kind: ClassVar[str] = "max"

    def __post_init__(self):
        if not (self.k >= 1 and math.isfinite(self.k)):
            raise ConfigError(f"MaxOf needs k >= 1, got {self.k}")

    def cdf(self, x):
        x = _arr(x)
        with np.errstate(divide="ignore"):
            return _out(np.exp(self.k * np.log(_arr(self.base.cdf(x)))), x)

    def sf(self, x):
        x = _arr(x)
        with np.errstate(divide="ignore"):
            return _out(-np.expm1(self.k * np.log1p(-_arr(self.base.sf(x)))), x)

    def pdf(self, x):
        x = _arr(x)
        F = _arr(self.base.cdf(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.k * np.power(F, self.k - 1.0) * _arr(self.base.pdf(x))
        return _out(np.nan_to_num(d), x)

    def logpdf(self, x):
        x = _arr(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (
                math.log(self.k)
                + (self.k - 1.0) * np.log(_arr(self.base.cdf(x)))
                + _arr(self.base.logpdf(x))
            )
        return _out(np.where(np.isnan(val), -np.inf, val), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(_arr(self.base.quantile(np.power(p, 1.0 / self.k))), p)

    def isf(self, q):
        q = _arr(q)
        with np.errstate(divide="ignore"):
            inner = -np.expm1(np.log1p(-q) / self.k)
        return _out(_arr(self.base.isf(inner)), q)

    def mean(self) -> float:
        from .orderstats import order_stat_max_mean

        return order_stat_max_mean(self.base, self.k)

    def support(self):
        return self.base.support()

    def breakpoints(self):
        return self.base.breakpoints()

    def atoms(self):
        locs, probs = self.base.atoms()
        if locs.size == 0:
            return _EMPTY
        upper = _arr(self.base.cdf(locs))
        lower = np.clip(upper - probs, 0.0, 1.0)
        return locs, upper**self.k - lower**self.k

    def sample(self, rng, size):
        return _arr(self.isf(rng.random(size)))

    def is_mhr(self) -> bool:
        if self.base.continuous_mass() < 1.0:
            return False
        return super().is_mhr()

    def to_config(self):
        return {"kind": self.kind, "base": self.base.to_config(), "k": self.k}


@dataclass(frozen=True)
class Truncated(RewardDistribution):
    """``base`` conditioned on ``D <= upper``."""

    base: RewardDistribution
    upper: float
    kind: ClassVar[str] = "truncated"
    _mass: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mass = float(self.base.cdf(self.upper))
        if not mass > 0:
            raise ConfigError(f"truncation point {self.upper} leaves no probability mass")
        object.__setattr__(self, "_mass", mass)

    def cdf(self, x):
        x = _arr(x)
        return _out(np.minimum(_arr(self.base.cdf(np.minimum(x, self.upper))) / self._mass, 1.0), x)

    def sf(self, x):
        return _out(1.0 - _arr(self.cdf(x)), x)

    def pdf(self, x):
        x = _arr(x)
        return _out(np.where(x <= self.upper, _arr(self.base.pdf(x)) / self._mass, 0.0), x)

    def logpdf(self, x):
        x = _arr(x)
        val = _arr(self.base.logpdf(x)) - math.log(self._mass)
        return _out(np.where(x <= self.upper, val, -np.inf), x)

    def quantile(self, p):
        p = _arr(p)
        return _out(np.minimum(_arr(self.base.quantile(p * self._mass)), self.upper), p)

    def mean(self) -> float:
        lo, hi = self.support()
        pts = [*self.atoms()[0], float(self.base.quantile(0.5 * self._mass))]
        return lo + quad(lambda t: float(self.sf(t)), lo, hi, points=pts)

    def support(self):
        lo, hi = self.base.support()
        return (lo, min(hi, self.upper))

    def breakpoints(self):
        return tuple(b for b in self.base.breakpoints() if b < self.upper)

    def atoms(self):
        locs, probs = self.base.atoms()
        keep = locs <= self.upper
        return locs[keep], probs[keep] / self._mass

    def to_config(self):
        return {"kind": self.kind, "base": self.base.to_config(), "upper": self.upper}


_SIMPLE = {
    "exponential": (Exponential, {"rate"}),
    "halfnormal": (HalfNormal, {"scale"}),
    "uniform": (Uniform, {"low", "high"}),
    "pointmass": (PointMass, {"value"}),
    "twopoint": (TwoPoint, {"value", "p"}),
}


def from_config(cfg: Any) -> RewardDistribution:
    """Build a distribution from a config dict (or a bare kind name).

    Unknown kinds or keys raise ConfigError.
    """
    if isinstance(cfg, RewardDistribution):
        return cfg
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"distribution config must be a dict with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    params = {k: v for k, v in cfg.items() if k != "kind"}
    try:
        if kind in _SIMPLE:
            cls, allowed = _SIMPLE[kind]
            _check_keys(kind, params, allowed)
            return cls(**{k: float(v) for k, v in params.items()})
        if kind == "tabulated":
            _check_keys(kind, params, {"x", "cdf"}, required={"x", "cdf"})
            return Tabulated(tuple(params["x"]), tuple(params["cdf"]))
        if kind == "max":
            _check_keys(kind, params, {"base", "k"}, required={"base", "k"})
            return MaxOf(from_config(params["base"]), float(params["k"]))
        if kind == "truncated":
            _check_keys(kind, params, {"base", "upper"}, required={"base", "upper"})
            return Truncated(from_config(params["base"]), float(params["upper"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters for {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown distribution kind {kind!r}")


def _check_keys(kind: str, params: dict, allowed: set, required: set = frozenset()) -> None:
    extra = set(params) - allowed
    if extra:
        raise ConfigError(f"unknown keys for {kind!r}: {sorted(extra)}")
    missing = set(required) - set(params)
    if missing:
        raise ConfigError(f"missing keys for {kind!r}: {sorted(missing)}")
