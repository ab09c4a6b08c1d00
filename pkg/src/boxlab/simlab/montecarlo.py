"""Seeded, paired Monte Carlo evaluation of policies.

Trial ``t`` draws from its own Philox stream keyed by the run seed with the
trial index in the second counter word, so any subset of trials can be
replayed alone and the results do not depend on how trials are split across
threads. Randomised policies get a separate stream per (trial, policy) in
the third counter word, which keeps the realisation identical no matter
which policies are evaluated.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..distributions import RewardDistribution
from ..errors import BoxlabError, ConfigError
from ..instance import NoiseProfile
from ..orderstats import order_stat_max_mean
from ..policies import (
    OptClairvoyant,
    Policy,
    best_linear_hindsight,
    policy_config,
    sigma_groups,
)
from ..regimes import AdversarialConstruction

BENCHMARKS = ("prophet", "random", "opt", "best_linear")
CHUNK = 512
MAX_SEED = 2**64 - 1


class SimulationError(BoxlabError):
    """A policy raised during a trial; the message names the trial for replay."""


def trial_generator(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, trial, stream)``."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, int(trial), int(stream), 0]))


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a Monte Carlo run."""

    distribution: RewardDistribution
    profile: NoiseProfile
    policies: Sequence[Policy]
    trials: int
    seed: int = 0
    benchmarks: tuple[str, ...] = ("prophet", "random")
    c_grid: tuple[float, ...] | None = None
    construction: AdversarialConstruction | None = None
    label: str = ""

    def __post_init__(self):
        self.trials = int(self.trials)
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.seed = int(self.seed)
        self.benchmarks = tuple(self.benchmarks)
        unknown = set(self.benchmarks) - set(BENCHMARKS)
        if unknown:
            raise ConfigError(f"unknown benchmarks {sorted(unknown)}; choose from {BENCHMARKS}")
        if "best_linear" in self.benchmarks:
            if not self.c_grid:
                raise ConfigError("best_linear benchmark needs a non-empty c_grid")
            self.c_grid = tuple(float(c) for c in self.c_grid)
        names = self.column_names()
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate policy or benchmark names: {names}")

    @property
    def n(self) -> int:
        return self.profile.n

    def column_names(self) -> list[str]:
        return [p.name for p in self.policies] + list(self.benchmarks)

    def to_config(self) -> dict[str, Any]:
        cfg: dict[str, Any] = {"distribution": self.distribution.to_config()}
        if self.construction is not None:
            cfg["profile"] = self.construction.to_config()
        else:
            cfg["profile"] = self.profile.to_config()
        cfg["policies"] = [policy_config(p) for p in self.policies]
        cfg["trials"] = self.trials
        cfg["seed"] = self.seed
        cfg["benchmarks"] = list(self.benchmarks)
        if self.c_grid is not None:
            cfg["c_grid"] = list(self.c_grid)
        if self.label:
            cfg["label"] = self.label
        return cfg


@dataclass
class RewardEstimate:
    """Monte Carlo estimate of one policy's expected reward.

    Ratios are derived from the stored means on access.
    """

    name: str
    mean: float
    stderr: float
    trials: int
    prophet_mean: float | None = None
    dist_mean: float | None = None

    @property
    def ratio_to_prophet(self) -> float | None:
        if not self.prophet_mean:
            return None
        return self.mean / self.prophet_mean

    @property
    def ratio_to_mean(self) -> float | None:
        if not self.dist_mean:
            return None
        return self.mean / self.dist_mean

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "mean": self.mean,
            "stderr": self.stderr,
            "trials": self.trials,
            "ratio_to_prophet": self.ratio_to_prophet,
            "ratio_to_mean": self.ratio_to_mean,
        }


def mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


def paired_ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Ratio of means with a delta-method standard error for paired samples."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    mn, md = float(np.mean(num)), float(np.mean(den))
    if md == 0:
        return math.inf if mn > 0 else math.nan, math.nan
    r = mn / md
    if num.size < 2:
        return r, math.nan
    resid = num - r * den
    return r, float(np.std(resid, ddof=1) / math.sqrt(num.size) / abs(md))


@dataclass
class SimulationResult:
    """Per-trial rewards and choices for every policy and benchmark column."""

    spec: ExperimentSpec
    names: list[str]
    rewards: np.ndarray  # (trials, columns)
    choices: np.ndarray  # (trials, columns), -1 where no single box is chosen
    best_c: np.ndarray | None = None
    fallbacks: int = 0
    _dist_mean: float | None = field(default=None, repr=False)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.rewards[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r}; have {self.names}") from None

    @property
    def dist_mean(self) -> float:
        if self._dist_mean is None:
            self._dist_mean = self.spec.distribution.mean()
        return self._dist_mean

    def estimate(self, name: str) -> RewardEstimate:
        mean, se = mean_and_stderr(self.column(name))
        prophet = float(np.mean(self.column("prophet"))) if "prophet" in self.names else None
        return RewardEstimate(name, mean, se, self.spec.trials, prophet, self.dist_mean)

    def estimates(self) -> list[RewardEstimate]:
        return [self.estimate(name) for name in self.names]

    def ratio(self, num: str, den: str) -> tuple[float, float]:
        return paired_ratio(self.column(num), self.column(den))

    def expected_max(self) -> float:
        """Exact ``E[D_(n:n)]`` for the experiment's distribution and size."""
        return order_stat_max_mean(self.spec.distribution, self.spec.n)

    def trace_rows(self):
        """Yield ``(trial, column, choice, reward)`` per trial and column."""
        for t in range(self.rewards.shape[0]):
            for j, name in enumerate(self.names):
                k = int(self.choices[t, j])
                yield t, name, (k if k >= 0 else ""), float(self.rewards[t, j])


def simulate(spec: ExperimentSpec, threads: int = 1) -> SimulationResult:
    """Run every trial of ``spec``; results are identical for any ``threads``."""
    dist = spec.distribution
    sigma = spec.profile.sigma
    n = spec.n
    columns: list[Policy | str] = list(spec.policies)
    opt_bench = OptClairvoyant(dist) if "opt" in spec.benchmarks else None
    for b in spec.benchmarks:
        columns.append(opt_bench if b == "opt" else b)
    names = spec.column_names()
    groups = sigma_groups(sigma)
    T = spec.trials
    rewards = np.empty((T, len(columns)))
    choices = np.full((T, len(columns)), -1, dtype=np.int64)
    best_c = np.full(T, np.nan) if "best_linear" in spec.benchmarks else None
    c_grid = spec.c_grid

    def run_block(start: int, stop: int) -> None:
        for t in range(start, stop):
            rng = trial_generator(spec.seed, t)
            x = dist.sample(rng, n)
            y = x + rng.standard_normal(n) * sigma
            for j, col in enumerate(columns):
                if isinstance(col, Policy):
                    prng = trial_generator(spec.seed, t, j + 1) if col.randomized else None
                    try:
                        k = col.choose(sigma, y, prng)
                    except Exception as exc:  # noqa: BLE001 - re-raised with replay context
                        raise SimulationError(
                            f"policy {names[j]!r} failed at trial {t} "
                            f"(seed {spec.seed}, stream {j + 1}): {exc}"
                        ) from exc
                    rewards[t, j] = x[k]
                    choices[t, j] = k
                elif col == "prophet":
                    k = int(np.argmax(x))
                    rewards[t, j] = x[k]
                    choices[t, j] = k
                elif col == "random":
                    rewards[t, j] = float(np.mean(x))
                else:  # best_linear
                    r, c = best_linear_hindsight(sigma, x, y, c_grid, groups)
                    rewards[t, j] = r
                    best_c[t] = c

    blocks = [(s, min(s + CHUNK, T)) for s in range(0, T, CHUNK)]
    threads = max(1, int(threads or 1))
    if threads == 1 or len(blocks) == 1:
        for s, e in blocks:
            run_block(s, e)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for fut in [pool.submit(run_block, s, e) for s, e in blocks]:
                fut.result()
    fallbacks = sum(
        c.engine.fallbacks for c in columns if isinstance(c, OptClairvoyant)
    )
    return SimulationResult(spec, names, rewards, choices, best_c, fallbacks)


def estimate_reward(spec: ExperimentSpec, threads: int = 1) -> list[RewardEstimate]:
    """Estimated expected reward of every policy and requested benchmark."""
    return simulate(spec, threads).estimates()
