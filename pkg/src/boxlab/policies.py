"""Selection policies over (noise profile, observations).

Every policy returns a 0-based box index. Ties are broken toward the lowest
index (``np.argmax`` semantics). Policies that need randomness draw it from
the generator passed to :meth:`Policy.choose`; deterministic ones ignore it.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Sequence

import numpy as np

from .distributions import RewardDistribution, from_config as dist_from_config
from .errors import ConfigError, NumericalError
from .instance import NoiseProfile
from .posterior import PosteriorEngine


def _sigma(profile) -> np.ndarray:
    if isinstance(profile, NoiseProfile):
        return profile.sigma
    return np.asarray(profile, dtype=float)


class Policy(ABC):
    """Maps ``(profile, y, rng)`` to a box index."""

    randomized: ClassVar[bool] = False

    @property
    @abstractmethod
    def name(self) -> str: ...

    @abstractmethod
    def choose(self, profile, y: np.ndarray, rng: np.random.Generator | None = None) -> int: ...

    def __call__(self, profile, y, rng=None) -> int:
        return self.choose(profile, y, rng)

    @abstractmethod
    def to_config(self) -> dict[str, Any]: ...


@dataclass(frozen=True)
class Naive(Policy):
    """Pick the largest observation."""

    label: str = "naive"

    @property
    def name(self):
        return self.label

    def choose(self, profile, y, rng=None):
        return int(np.argmax(y))

    def to_config(self):
        return {"policy": "naive"}


@dataclass(frozen=True)
class LinearFixed(Policy):
    """Pick the largest ``y_i - c * sigma_i``."""

    c: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise ConfigError(f"linear_fixed needs a finite c, got {self.c}")

    @property
    def name(self):
        return self.label or f"linear_fixed(c={self.c:g})"

    def choose(self, profile, y, rng=None):
        return int(np.argmax(np.asarray(y) - self.c * _sigma(profile)))

    def to_config(self):
        return {"policy": "linear_fixed", "c": self.c}


# ---- gamma rules for LinearGamma -------------------------------------------

_STATISTICS = {
    "mean_y": lambda s, y: float(np.mean(y)),
    "max_y": lambda s, y: float(np.max(y)),
    "mean_sigma": lambda s, y: float(np.mean(s)),
    "max_sigma": lambda s, y: float(np.max(s)),
}


@dataclass(frozen=True)
class ConstantGamma:
    c: float

    def __call__(self, sigma, y) -> float:
        return self.c

    def to_config(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class QuantileGamma:
    """``quantile(y, y_quantile) / max(quantile(sigma, sigma_quantile), floor)``."""

    y_quantile: float = 0.9
    sigma_quantile: float = 0.9
    floor: float = 1e-12

    def __post_init__(self):
        for q in (self.y_quantile, self.sigma_quantile):
            if not 0.0 <= q <= 1.0:
                raise ConfigError(f"quantile levels must lie in [0, 1], got {q}")
        if not self.floor > 0:
            raise ConfigError("quantile gamma floor must be positive")

    def __call__(self, sigma, y) -> float:
        den = max(float(np.quantile(sigma, self.sigma_quantile)), self.floor)
        return float(np.quantile(y, self.y_quantile)) / den

    def to_config(self):
        return {
            "kind": "quantile",
            "y_quantile": self.y_quantile,
            "sigma_quantile": self.sigma_quantile,
            "floor": self.floor,
        }


@dataclass(frozen=True)
class TabulatedGamma:
    """Piecewise-linear function of one summary statistic of ``(sigma, y)``."""

    statistic: str
    x: tuple
    values: tuple

    def __post_init__(self):
        if self.statistic not in _STATISTICS:
            raise ConfigError(
                f"unknown statistic {self.statistic!r}; choose from {sorted(_STATISTICS)}"
            )
        xs = np.asarray(self.x, dtype=float)
        if xs.ndim != 1 or xs.size == 0 or xs.size != len(self.values) or np.any(np.diff(xs) <= 0):
            raise ConfigError("tabulated gamma needs strictly increasing x and matching values")
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, sigma, y) -> float:
        return float(np.interp(_STATISTICS[self.statistic](sigma, y), self.x, self.values))

    def to_config(self):
        return {"kind": "table", "statistic": self.statistic, "x": list(self.x),
                "values": list(self.values)}


GammaRule = ConstantGamma | QuantileGamma | TabulatedGamma


def gamma_from_config(cfg: dict) -> GammaRule:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"gamma spec must be a dict with 'kind', got {cfg!r}")
    kind = cfg["kind"]
    params = {k: v for k, v in cfg.items() if k != "kind"}
    allowed = {
        "constant": {"c"},
        "quantile": {"y_quantile", "sigma_quantile", "floor"},
        "table": {"statistic", "x", "values"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown gamma kind {kind!r}")
    _check_keys(f"gamma {kind}", params, allowed[kind])
    if kind == "constant":
        return ConstantGamma(float(params.get("c", 0.0)))
    if kind == "quantile":
        return QuantileGamma(**{k: float(v) for k, v in params.items()})
    try:
        return TabulatedGamma(params["statistic"], tuple(params["x"]), tuple(params["values"]))
    except KeyError as exc:
        raise ConfigError(f"gamma table is missing {exc}") from exc


@dataclass(frozen=True)
class LinearGamma(Policy):
    """Pick the largest ``y_i - gamma(sigma, y) * sigma_i``."""

    gamma: GammaRule
    label: str = ""

    @property
    def name(self):
        return self.label or "linear_gamma"

    def choose(self, profile, y, rng=None):
        sigma = _sigma(profile)
        g = self.gamma(sigma, y)
        if not math.isfinite(g):
            raise NumericalError(f"gamma evaluated to {g} on observations with max y={np.max(y)}")
        return int(np.argmax(np.asarray(y) - g * sigma))

    def to_config(self):
        return {"policy": "linear_gamma", "gamma": self.gamma.to_config()}


@dataclass(frozen=True)
class PrefixNaive(Policy):
    """Largest observation among the first ``k`` (lowest-noise) boxes."""

    k: int
    label: str = ""

    def __post_init__(self):
        if int(self.k) < 1:
            raise ConfigError(f"prefix size must be >= 1, got {self.k}")

    @property
    def name(self):
        return self.label or f"prefix_naive(k={self.k})"

    def choose(self, profile, y, rng=None):
        return int(np.argmax(np.asarray(y)[: self.k]))

    def to_config(self):
        return {"policy": "prefix_naive", "k": int(self.k)}


def ignore_large_prefix(n: int, alpha: float) -> int:
    """Prefix size ``max(1, floor(alpha * n))``."""
    return max(1, int(math.floor(alpha * n + 1e-9)))


def ignore_large_exp_prefix(n: int, alpha: float) -> int:
    """Prefix size ``max(1, floor(n ** alpha))``."""
    return max(1, int(math.floor(n**alpha + 1e-9)))


@dataclass(frozen=True)
class IgnoreLarge(Policy):
    """Draw ``alpha ~ U[0, 1]`` and run naive on the ``floor(alpha n)`` least noisy boxes.

    Only the order of the (sorted) profile is used, never the sigma values.
    ``alpha`` may be fixed for testing.
    """

    alpha: float | None = None
    label: str = ""
    randomized: ClassVar[bool] = True

    def __post_init__(self):
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def name(self):
        return self.label or "ignore_large"

    def _alpha(self, rng) -> float:
        if self.alpha is not None:
            return self.alpha
        if rng is None:
            raise ConfigError("ignore_large needs a random generator unless alpha is fixed")
        return float(rng.random())

    def prefix(self, n: int, alpha: float) -> int:
        return ignore_large_prefix(n, alpha)

    def choose(self, profile, y, rng=None):
        y = np.asarray(y)
        k = self.prefix(y.size, self._alpha(rng))
        return int(np.argmax(y[:k]))

    def to_config(self):
        cfg: dict[str, Any] = {"policy": "ignore_large"}
        if self.alpha is not None:
            cfg["alpha"] = self.alpha
        return cfg


@dataclass(frozen=True)
class IgnoreLargeExp(IgnoreLarge):
    """As :class:`IgnoreLarge` but with prefix size ``floor(n ** alpha)``."""

    @property
    def name(self):
        return self.label or "ignore_large_exp"

    def prefix(self, n: int, alpha: float) -> int:
        return ignore_large_exp_prefix(n, alpha)

    def to_config(self):
        cfg = super().to_config()
        cfg["policy"] = "ignore_large_exp"
        return cfg


@dataclass(frozen=True)
class RandomBox(Policy):
    """Uniformly random box."""

    label: str = "random"
    randomized: ClassVar[bool] = True

    @property
    def name(self):
        return self.label

    def choose(self, profile, y, rng=None):
        if rng is None:
            raise ConfigError("random policy needs a random generator")
        return int(rng.integers(np.asarray(y).size))

    def to_config(self):
        return {"policy": "random"}


@dataclass(frozen=True)
class OptClairvoyant(Policy):
    """Largest posterior mean ``E[X_i | Y_i = y_i]`` under the true prior."""

    distribution: RewardDistribution
    label: str = "opt"
    engine: PosteriorEngine = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "engine", PosteriorEngine(self.distribution))

    @property
    def name(self):
        return self.label

    def posterior_means(self, profile, y) -> np.ndarray:
        return self.engine(_sigma(profile), np.asarray(y, dtype=float))

    def choose(self, profile, y, rng=None):
        return int(np.argmax(self.posterior_means(profile, y)))

    def to_config(self):
        return {"policy": "opt", "distribution": self.distribution.to_config()}


# ---- benchmarks -------------------------------------------------------------


def sigma_groups(sigma: np.ndarray) -> list[slice]:
    """Contiguous runs of equal sigma in a sorted profile."""
    sigma = np.asarray(sigma)
    cuts = np.flatnonzero(np.diff(sigma) != 0) + 1
    edges = [0, *cuts.tolist(), sigma.size]
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def best_linear_hindsight(
    profile,
    x: np.ndarray,
    y: np.ndarray,
    c_grid: Sequence[float],
    groups: list[slice] | None = None,
) -> tuple[float, float]:
    """Best realised reward of ``LinearFixed(c)`` over ``c`` in ``c_grid``.

    Returns ``(reward, c)`` with the smallest ``c`` attaining the maximum.
    Boxes sharing a noise level are compared on ``y`` alone, so only one
    candidate per level (its first argmax) needs scoring for every ``c``.
    """
    if len(c_grid) == 0:
        raise ConfigError("c_grid must be non-empty")
    sigma = _sigma(profile)
    x = np.asarray(x)
    y = np.asarray(y)
    if groups is None:
        if np.any(np.diff(sigma) < 0):
            # unsorted input: score every box directly
            groups = [slice(i, i + 1) for i in range(sigma.size)]
        else:
            groups = sigma_groups(sigma)
    reps = np.array([g.start + int(np.argmax(y[g])) for g in groups])
    cs = np.sort(np.asarray(c_grid, dtype=float))
    scores = y[reps][:, None] - sigma[reps][:, None] * cs[None, :]
    picks = reps[np.argmax(scores, axis=0)]
    rewards = x[picks]
    j = int(np.argmax(rewards))
    return float(rewards[j]), float(cs[j])


def benchmark_rewards(x: np.ndarray) -> tuple[float, float]:
    """Prophet reward ``max x`` and the expected reward of a uniform pick, ``mean x``."""
    x = np.asarray(x, dtype=float)
    return float(np.max(x)), float(np.mean(x))


# ---- config -----------------------------------------------------------------


def _check_keys(what: str, params: dict, allowed: set) -> None:
    extra = set(params) - allowed
    if extra:
        raise ConfigError(f"unknown keys for {what}: {sorted(extra)}")


def policy_from_config(cfg: dict, distribution: RewardDistribution | None = None) -> Policy:
    """Build a policy from ``{"policy": <name>, params...}``.

    ``opt`` uses its own ``distribution`` entry if present, else the
    experiment's distribution. Unknown names or keys raise ConfigError.
    """
    if isinstance(cfg, Policy):
        return cfg
    if isinstance(cfg, str):
        cfg = {"policy": cfg}
    if not isinstance(cfg, dict) or "policy" not in cfg:
        raise ConfigError(f"policy config must be a dict with a 'policy' key, got {cfg!r}")
    kind = cfg["policy"]
    params = {k: v for k, v in cfg.items() if k != "policy"}
    label = params.pop("name", "")
    try:
        if kind == "naive":
            _check_keys(kind, params, set())
            return Naive(label or "naive")
        if kind == "linear_fixed":
            _check_keys(kind, params, {"c"})
            if "c" not in params:
                raise ConfigError("linear_fixed needs 'c'")
            return LinearFixed(float(params["c"]), label)
        if kind == "linear_gamma":
            _check_keys(kind, params, {"gamma"})
            if "gamma" not in params:
                raise ConfigError("linear_gamma needs 'gamma'")
            return LinearGamma(gamma_from_config(params["gamma"]), label)
        if kind in ("ignore_large", "ignore_large_exp"):
            _check_keys(kind, params, {"alpha"})
            alpha = params.get("alpha")
            cls = IgnoreLarge if kind == "ignore_large" else IgnoreLargeExp
            return cls(None if alpha is None else float(alpha), label)
        if kind == "prefix_naive":
            _check_keys(kind, params, {"k"})
            if "k" not in params:
                raise ConfigError("prefix_naive needs 'k'")
            return PrefixNaive(int(params["k"]), label)
        if kind == "opt":
            _check_keys(kind, params, {"distribution"})
            dist = params.get("distribution")
            dist = dist_from_config(dist) if dist is not None else distribution
            if dist is None:
                raise ConfigError("opt policy needs a distribution")
            return OptClairvoyant(dist, label or "opt")
        if kind == "random":
            _check_keys(kind, params, set())
            return RandomBox(label or "random")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters for policy {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown policy {kind!r}")


def policy_config(policy: Policy) -> dict:
    """Config dict including a custom display name when one was set."""
    cfg = policy.to_config()
    default = policy_from_config(dict(cfg)).name if cfg.get("policy") != "opt" else "opt"
    if policy.name != default:
        cfg["name"] = policy.name
    return cfg
