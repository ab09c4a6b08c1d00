"""Noise profiles and sampled realisations of a box instance."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import RewardDistribution
from .errors import ConfigError


@dataclass(frozen=True)
class NoiseProfile:
    """Per-box noise standard deviations, stored sorted ascending.

    ``permutation[i]`` is the position in the caller's original ordering of
    the box now at index ``i``. Indices throughout the package are 0-based.
    """

    sigma: np.ndarray
    permutation: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim != 1 or sigma.size == 0:
            raise ConfigError("noise profile must be a non-empty 1-d array")
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise ConfigError("noise standard deviations must be finite and >= 0")
        if np.any(np.diff(sigma) < 0):
            raise ConfigError("noise profile must be sorted ascending; use NoiseProfile.from_values")
        sigma.setflags(write=False)
        perm = np.asarray(self.permutation, dtype=np.int64)
        perm.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "permutation", perm)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "NoiseProfile":
        """Sort arbitrary values (stably) and remember where each came from."""
        values = np.asarray(values, dtype=float)
        order = np.argsort(values, kind="stable")
        return cls(values[order], order)

    @classmethod
    def from_blocks(cls, blocks: Sequence[tuple[int, float]]) -> "NoiseProfile":
        """Concatenate ``(count, sigma)`` blocks."""
        parts = []
        for count, s in blocks:
            if int(count) < 0:
                raise ConfigError(f"block count must be >= 0, got {count}")
            parts.append(np.full(int(count), float(s)))
        return cls.from_values(np.concatenate(parts) if parts else np.empty(0))

    @property
    def n(self) -> int:
        return int(self.sigma.size)

    def __len__(self) -> int:
        return self.n

    def to_config(self) -> dict:
        """Run-length encoded description, reloadable by :meth:`from_blocks`."""
        blocks: list[list] = []
        for s in self.sigma.tolist():
            if blocks and blocks[-1][1] == s:
                blocks[-1][0] += 1
            else:
                blocks.append([1, s])
        return {"blocks": [{"count": c, "sigma": s} for c, s in blocks]}


@dataclass(frozen=True)
class Realization:
    """One draw of rewards ``x``, noise ``eps`` and observations ``y = x + eps``."""

    x: np.ndarray
    eps: np.ndarray
    y: np.ndarray

    @classmethod
    def draw(
        cls, dist: RewardDistribution, profile: NoiseProfile, rng: np.random.Generator
    ) -> "Realization":
        """Sample rewards first, then standard normals scaled by the profile."""
        x = dist.sample(rng, profile.n)
        eps = rng.standard_normal(profile.n) * profile.sigma
        return cls(x, eps, x + eps)
