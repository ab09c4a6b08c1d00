"""JSON experiment configs.

A simulation config is a JSON object::

    {
      "distribution": {"kind": "exponential", "rate": 1.0},
      "profile": {"blocks": [{"count": 10, "sigma": 0.0}, {"count": 90, "sigma": 5.0}]},
      "policies": [{"policy": "naive"}, {"policy": "opt"}],
      "trials": 10000,
      "seed": 7,
      "benchmarks": ["prophet", "random"]
    }

``profile`` is one of ``{"sigma": [...]}``, ``{"blocks": [...]}`` or
``{"construction": "naive-adversary" | "linear-adversary", "n": N,
"overrides": {...}}``. Optional keys: ``c_grid`` (needed by the
``best_linear`` benchmark; defaults to the standard grid when omitted) and
``label``. Unknown keys anywhere are errors. A JSON result written by the
CLI can be used as a config: its ``config`` entry is read.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .distributions import from_config as dist_from_config
from .errors import ConfigError
from .instance import NoiseProfile
from .policies import policy_from_config
from .regimes import build_construction
from .simlab.montecarlo import ExperimentSpec

SIMULATE_KEYS = {"distribution", "profile", "policies", "trials", "seed", "benchmarks", "c_grid", "label"}
PROFILE_KEYS = {"sigma", "blocks", "construction", "n", "overrides"}


def load_json(path: str | Path) -> dict[str, Any]:
    """Read a config file; unwrap ``{"config": ...}`` result files."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return unwrap(data)


def unwrap(data: Any) -> dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in data and "version" in data:
        data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError("embedded config must be a JSON object")
    return data


def parse_json_arg(text: str) -> Any:
    """Inline JSON, or a bare word taken as a string (``halfnormal``)."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def profile_from_config(cfg: dict, distribution) -> tuple[NoiseProfile, Any]:
    """Return ``(profile, construction or None)``."""
    if not isinstance(cfg, dict):
        raise ConfigError("profile must be a JSON object")
    extra = set(cfg) - PROFILE_KEYS
    if extra:
        raise ConfigError(f"unknown profile keys {sorted(extra)}")
    given = [k for k in ("sigma", "blocks", "construction") if k in cfg]
    if len(given) != 1:
        raise ConfigError("profile needs exactly one of 'sigma', 'blocks', 'construction'")
    kind = given[0]
    if kind != "construction" and ("n" in cfg or "overrides" in cfg):
        raise ConfigError("'n' and 'overrides' only apply to constructions")
    if kind == "sigma":
        return NoiseProfile.from_values(cfg["sigma"]), None
    if kind == "blocks":
        blocks = []
        for b in cfg["blocks"]:
            if not isinstance(b, dict) or set(b) != {"count", "sigma"}:
                raise ConfigError(f"block must be {{'count', 'sigma'}}, got {b!r}")
            blocks.append((int(b["count"]), float(b["sigma"])))
        return NoiseProfile.from_blocks(blocks), None
    if "n" not in cfg:
        raise ConfigError("construction profile needs 'n'")
    cons = build_construction(cfg["construction"], distribution, int(cfg["n"]), cfg.get("overrides"))
    return cons.profile, cons


def spec_from_config(cfg: dict, seed: int | None = None, trials: int | None = None) -> ExperimentSpec:
    """Build an ExperimentSpec; ``seed``/``trials`` override the file."""
    cfg = unwrap(cfg)
    extra = set(cfg) - SIMULATE_KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}; allowed {sorted(SIMULATE_KEYS)}")
    for key in ("distribution", "profile", "policies"):
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    dist = dist_from_config(cfg["distribution"])
    profile, cons = profile_from_config(cfg["profile"], dist)
    if not isinstance(cfg["policies"], list):
        raise ConfigError("'policies' must be a list")
    policies = [policy_from_config(p, dist) for p in cfg["policies"]]
    benchmarks = tuple(cfg.get("benchmarks", ("prophet", "random")))
    c_grid = cfg.get("c_grid")
    if c_grid is None and "best_linear" in benchmarks:
        from .simlab.separations import linear_c_grid

        c_grid = linear_c_grid(profile.n)
    t = trials if trials is not None else cfg.get("trials")
    if t is None:
        raise ConfigError("config is missing 'trials' (or pass --trials)")
    s = seed if seed is not None else cfg.get("seed", 0)
    try:
        return ExperimentSpec(
            dist, profile, policies, int(t), int(s), benchmarks,
            tuple(c_grid) if c_grid is not None else None, cons, str(cfg.get("label", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
