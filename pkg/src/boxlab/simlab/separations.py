"""Desk-scale separation experiments between policies and benchmarks.

Each experiment builds a noise profile (an adversarial construction or a
regime-specific profile), runs a paired Monte Carlo simulation for every
instance size, and reports ratios together with the inequality each one is
checked against. A check passes when the inequality holds after allowing
three standard errors of Monte Carlo slack in the favourable direction;
ordering checks compare point estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..distributions import RewardDistribution, TwoPoint
from ..distributions import from_config as dist_from_config
from ..errors import ConfigError
from ..instance import NoiseProfile
from ..orderstats import order_stat_max_mean
from ..policies import IgnoreLarge, IgnoreLargeExp, Naive, OptClairvoyant, PrefixNaive
from ..regimes import (
    SCALED_LINEAR_OVERRIDES,
    classify,
    construct_linear_adversary,
    construct_naive_adversary,
    exact_prefix_profile,
)
from .._numeric import round_half_up
from .montecarlo import ExperimentSpec, SimulationResult, simulate

SLACK = 3.0


@dataclass
class Check:
    """``value <op> bound`` with ``slack`` standard errors of tolerance."""

    statement: str
    value: float
    bound: float
    stderr: float
    op: str
    passed: bool

    @classmethod
    def at_most(cls, statement, value, bound, stderr=0.0):
        return cls(statement, value, bound, stderr, "<=", value - SLACK * stderr <= bound)

    @classmethod
    def at_least(cls, statement, value, bound, stderr=0.0):
        return cls(statement, value, bound, stderr, ">=", value + SLACK * stderr >= bound)

    @classmethod
    def greater(cls, statement, value, bound):
        return cls(statement, value, bound, 0.0, ">", value > bound)

    def to_dict(self) -> dict[str, Any]:
        return {
            "statement": self.statement,
            "value": self.value,
            "op": self.op,
            "bound": self.bound,
            "stderr": self.stderr,
            "slack_stderrs": SLACK if self.stderr else 0.0,
            "pass": self.passed,
        }


@dataclass
class SeparationRow:
    label: str
    n: int
    estimates: dict[str, dict]
    ratios: dict[str, dict]
    checks: list[Check]
    info: dict[str, Any] = field(default_factory=dict)

    def ratio(self, key: str) -> float:
        return self.ratios[key]["value"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "n": self.n,
            "estimates": self.estimates,
            "ratios": self.ratios,
            "checks": [c.to_dict() for c in self.checks],
            "info": self.info,
        }


@dataclass
class SeparationReport:
    name: str
    params: dict[str, Any]
    rows: list[SeparationRow]
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.all_checks())

    def all_checks(self) -> list[Check]:
        out = [c for r in self.rows for c in r.checks]
        return out + self.checks

    def row(self, label: str) -> SeparationRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self) -> dict[str, Any]:
        return {
            "separation": self.name,
            "params": self.params,
            "rows": [r.to_dict() for r in self.rows],
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }


def _ratio_entry(value: float, stderr: float, compared_to: str = "") -> dict:
    entry = {
        "value": value,
        "stderr": stderr,
        "ci95": [value - 1.96 * stderr, value + 1.96 * stderr],
    }
    if compared_to:
        entry["compared_to"] = compared_to
    return entry


def _estimates(res: SimulationResult) -> dict[str, dict]:
    return {e.name: e.to_dict() for e in res.estimates()}


def _scaled(res: SimulationResult, name: str, scale: float) -> tuple[float, float]:
    e = res.estimate(name)
    return e.mean / scale, e.stderr / scale


def _increasing(statement: str, values: list[float]) -> Check:
    diffs = np.diff(values)
    worst = float(np.min(diffs)) if diffs.size else math.inf
    return Check(statement, worst, 0.0, 0.0, ">", bool(np.all(diffs > 0)))


def _resolve(name: str, params: dict | None, defaults: dict) -> dict:
    params = dict(params or {})
    extra = set(params) - set(defaults)
    if extra:
        raise ConfigError(f"unknown parameters for {name}: {sorted(extra)}; allowed {sorted(defaults)}")
    out = dict(defaults)
    out.update(params)
    return out


def _dist(cfg) -> RewardDistribution:
    return dist_from_config(cfg)


# ---------------------------------------------------------------------------


def naive_vs_opt(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """Naive against naive-over-exact-boxes on the naive adversary.

    The default reward law at size ``n`` is ``n`` with probability ``1/n``
    (else 0), so ``E[D] = 1``.
    """
    p = _resolve("naive-vs-opt", params, {
        "n": [200, 1000, 5000], "trials": 100_000, "seed": 0,
        "distribution": "twopoint-1/n", "overrides": {},
    })
    rows = []
    for n in p["n"]:
        n = int(n)
        dist = TwoPoint(float(n), 1.0 / n) if p["distribution"] == "twopoint-1/n" else _dist(p["distribution"])
        cons = construct_naive_adversary(dist, n, p["overrides"])
        exact = cons.params["exact_count"]
        spec = ExperimentSpec(
            dist, cons.profile, [Naive(), PrefixNaive(exact, "opt-proxy")],
            p["trials"], p["seed"], ("prophet",), construction=cons,
        )
        res = simulate(spec, threads)
        mean_d = dist.mean()
        e_max = order_stat_max_mean(dist, n)
        naive = res.estimate("naive")
        proxy = res.estimate("opt-proxy")
        r, r_se = res.ratio("opt-proxy", "naive")
        ratios = {
            "opt-proxy/naive": _ratio_entry(r, r_se, f"> n/20 = {n / 20:g}"),
            "naive/E[D]": _ratio_entry(naive.mean / mean_d, naive.stderr / mean_d, "<= 4"),
            "opt-proxy/E[D_n:n]": _ratio_entry(proxy.mean / e_max, proxy.stderr / e_max, ">= 0.5"),
            "naive/prophet": _ratio_entry(*res.ratio("naive", "prophet")),
        }
        checks = [
            Check.at_most(f"n={n}: R_naive <= 4 E[D]", naive.mean, 4.0 * mean_d, naive.stderr),
            Check.at_least(f"n={n}: R_opt-proxy >= E[D_n:n]/2", proxy.mean, 0.5 * e_max, proxy.stderr),
            Check.greater(f"n={n}: opt-proxy/naive > n/20", r, n / 20.0),
        ]
        info = {"construction": cons.to_dict(), "E[D]": mean_d, "E[D_n:n]": e_max,
                "config": spec.to_config()}
        rows.append(SeparationRow(f"n={n}", n, _estimates(res), ratios, checks, info))
    cross = [_increasing("opt-proxy/naive strictly increasing in n",
                         [r.ratio("opt-proxy/naive") for r in rows])]
    return SeparationReport("naive-vs-opt", p, rows, cross)


def linear_c_grid(n: int, points: int = 64) -> list[float]:
    """Zero followed by log-spaced values up to ``2 sqrt(ln n)``."""
    top = 2.0 * math.sqrt(math.log(n))
    return [0.0, *np.geomspace(top * 1e-3, top, points - 1).tolist()]


def linear_vs_opt(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """Best fixed linear policy in hindsight against naive-over-exact-and-small boxes."""
    p = _resolve("linear-vs-opt", params, {
        "n": [100, 1000, 10000], "trials": 100_000, "seed": 0,
        "distribution": {"kind": "exponential", "rate": 1.0},
        "overrides": dict(SCALED_LINEAR_OVERRIDES), "c_grid_points": 64, "include_opt": True,
    })
    dist = _dist(p["distribution"])
    rows = []
    for n in p["n"]:
        n = int(n)
        cons = construct_linear_adversary(dist, n, p["overrides"])
        k = 1 + cons.params["small_count"]
        grid = linear_c_grid(n, int(p["c_grid_points"]))
        bench = ("prophet", "best_linear") + (("opt",) if p["include_opt"] else ())
        spec = ExperimentSpec(
            dist, cons.profile, [PrefixNaive(k, "opt-proxy"), Naive()],
            p["trials"], p["seed"], bench, c_grid=grid, construction=cons,
        )
        res = simulate(spec, threads)
        r, r_se = res.ratio("opt-proxy", "best_linear")
        ratios = {
            "opt-proxy/best_linear": _ratio_entry(r, r_se, "increasing in n; > 2 at the largest n"),
            "opt-proxy/naive": _ratio_entry(*res.ratio("opt-proxy", "naive")),
            "best_linear/prophet": _ratio_entry(*res.ratio("best_linear", "prophet")),
        }
        if p["include_opt"]:
            ratios["opt/best_linear"] = _ratio_entry(*res.ratio("opt", "best_linear"))
        best_c = res.best_c
        info = {
            "construction": cons.to_dict(),
            "c_grid": grid,
            "best_c_median": float(np.median(best_c)),
            "config": spec.to_config(),
        }
        rows.append(SeparationRow(f"n={n}", n, _estimates(res), ratios, [], info))
    values = [r.ratio("opt-proxy/best_linear") for r in rows]
    cross = [
        _increasing("opt-proxy/best_linear increasing in n", values),
        Check.greater(f"n={rows[-1].n}: opt-proxy/best_linear > 2", values[-1], 2.0),
    ]
    return SeparationReport("linear-vs-opt", p, rows, cross)


def medium_noise_profile(n: int, c: float, e_max: float, multiplier: float) -> NoiseProfile:
    """``round(n^c) - 1`` exact boxes; the rest at ``multiplier * E[D_n:n]``."""
    exact = max(round_half_up(n**c) - 1, 0)
    return exact_prefix_profile(n, exact, multiplier * e_max)


def medium_noise_opt_vs_prophet(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """Clairvoyant reward relative to ``E[D_n:n]`` under medium noise, by ``c``."""
    p = _resolve("medium-noise-opt-vs-prophet", params, {
        "n": 10_000, "c": [0.1, 0.3, 0.6], "trials": 10_000, "seed": 0,
        "distribution": {"kind": "halfnormal", "scale": 1.0}, "noise_multiplier": 1000.0,
    })
    dist = _dist(p["distribution"])
    n = int(p["n"])
    e_max = order_stat_max_mean(dist, n)
    rows = []
    cases: list[tuple[str, float | None, NoiseProfile]] = [
        (f"c={c:g}", float(c), medium_noise_profile(n, float(c), e_max, p["noise_multiplier"]))
        for c in p["c"]
    ]
    cases.append(("zero-noise", None, NoiseProfile.from_blocks([(n, 0.0)])))
    for label, c, prof in cases:
        spec = ExperimentSpec(dist, prof, [OptClairvoyant(dist)], p["trials"], p["seed"], ("prophet",))
        res = simulate(spec, threads)
        v, se = _scaled(res, "opt", e_max)
        checks = []
        info: dict[str, Any] = {"E[D_n:n]": e_max, "profile": prof.to_config()}
        if c is not None:
            rep = classify(dist, n, c, prof)
            info["regime"] = rep.to_dict()
            checks.append(Check(f"{label}: profile is medium noise", float(rep.sigma_power),
                                rep.threshold_medium, 0.0, ">", rep.medium_noise))
        ratios = {"opt/E[D_n:n]": _ratio_entry(v, se), "opt/prophet": _ratio_entry(*res.ratio("opt", "prophet"))}
        rows.append(SeparationRow(label, n, _estimates(res), ratios, checks, info))
    noisy = rows[:-1]
    values = [r.ratio("opt/E[D_n:n]") for r in noisy]
    zero = rows[-1].ratio("opt/E[D_n:n]")
    cross = [
        _increasing("opt/E[D_n:n] increasing in c", values),
        Check.at_least(f"{noisy[0].label}: zero-noise ratio / ratio >= 2", zero / values[0], 2.0),
    ]
    return SeparationReport("medium-noise-opt-vs-prophet", p, rows, cross)


def large_noise_opt_vs_random(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """Clairvoyant reward under large noise against ``86 sqrt(ln(cn)) E[D]``.

    The first ``cn - 1`` boxes are exact; the remaining boxes sit just above
    the large-noise threshold (``threshold_factor`` times it).
    """
    p = _resolve("large-noise-opt-vs-random", params, {
        "n": 10_000, "cn": 4, "trials": 10_000, "seed": 0,
        "distribution": {"kind": "halfnormal", "scale": 1.0}, "threshold_factor": 1.01,
    })
    dist = _dist(p["distribution"])
    n = int(p["n"])
    cn = int(p["cn"])
    if not 3 <= cn <= n:
        raise ConfigError(f"need 3 <= cn <= n, got cn={cn}")
    c = cn / n
    e_cn = order_stat_max_mean(dist, cn)
    threshold = e_cn * math.sqrt(math.log(n)) / math.log(cn)
    prof = exact_prefix_profile(n, cn - 1, float(p["threshold_factor"]) * threshold)
    rep = classify(dist, n, c, prof)
    spec = ExperimentSpec(dist, prof, [OptClairvoyant(dist)], p["trials"], p["seed"], ("prophet", "random"))
    res = simulate(spec, threads)
    opt = res.estimate("opt")
    mean_d = dist.mean()
    bound = 86.0 * math.sqrt(math.log(cn)) * mean_d
    ratios = {
        "opt/E[D]": _ratio_entry(opt.mean / mean_d, opt.stderr / mean_d,
                                 f"<= 86 sqrt(ln cn) = {bound / mean_d:.6g}"),
        "opt/random": _ratio_entry(*res.ratio("opt", "random")),
        "opt/prophet": _ratio_entry(*res.ratio("opt", "prophet")),
    }
    checks = [
        Check(f"cn={cn}: profile is large noise", rep.sigma_linear, rep.threshold_large or math.nan,
              0.0, ">", bool(rep.large_noise)),
        Check.at_most(f"cn={cn}: R_opt <= 86 sqrt(ln cn) E[D]", opt.mean, bound, opt.stderr),
    ]
    info = {"regime": rep.to_dict(), "profile": prof.to_config(), "E[D]": mean_d}
    row = SeparationRow(f"cn={cn}", n, _estimates(res), ratios, checks, info)
    return SeparationReport("large-noise-opt-vs-random", p, [row], [])


def _ignore_large(name: str, policy_cls, exact_of: Callable[[int, float], int],
                  constant: float, defaults: dict, params, threads) -> SeparationReport:
    p = _resolve(name, params, defaults)
    n = int(p["n"])
    c = float(p["c"])
    if not 0 < c <= 1:
        raise ConfigError(f"c must lie in (0, 1], got {c}")
    rows = []
    for dcfg in p["distributions"]:
        dist = _dist(dcfg)
        e_max = order_stat_max_mean(dist, n)
        exact = exact_of(n, c)
        prof = exact_prefix_profile(n, exact, float(p["noise_multiplier"]) * e_max)
        pol = policy_cls()
        spec = ExperimentSpec(dist, prof, [pol], p["trials"], p["seed"], ("prophet",))
        res = simulate(spec, threads)
        v, se = _scaled(res, pol.name, e_max)
        bound = constant * c * c
        ratios = {f"{pol.name}/E[D_n:n]": _ratio_entry(v, se, f">= {bound:.6g}"),
                  f"{pol.name}/prophet": _ratio_entry(*res.ratio(pol.name, "prophet"))}
        checks = [Check.at_least(f"{dist.kind}: R/E[D_n:n] >= {bound:.6g}", v, bound, se)]
        info = {"E[D_n:n]": e_max, "exact_boxes": exact, "profile": prof.to_config()}
        rows.append(SeparationRow(dist.kind, n, _estimates(res), ratios, checks, info))
    return SeparationReport(name, p, rows, [])


def ignore_large_approx(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """IgnoreLarge with ``cn`` exact boxes and the rest hopelessly noisy."""
    return _ignore_large(
        "ignore-large-approx", IgnoreLarge, lambda n, c: round_half_up(c * n), 1.0 / 20.0,
        {"n": 1000, "c": 0.5, "trials": 100_000, "seed": 0, "noise_multiplier": 1000.0,
         "distributions": [{"kind": "exponential", "rate": 1.0}, {"kind": "halfnormal", "scale": 1.0}]},
        params, threads,
    )


def ignore_large_exp_approx(params: dict | None = None, threads: int = 1) -> SeparationReport:
    """IgnoreLargeExp with ``n^c`` exact boxes and the rest hopelessly noisy."""
    return _ignore_large(
        "ignore-large-exp-approx", IgnoreLargeExp, lambda n, c: round_half_up(n**c), 1.0 / 576.0,
        {"n": 4096, "c": 0.5, "trials": 100_000, "seed": 0, "noise_multiplier": 1000.0,
         "distributions": [{"kind": "halfnormal", "scale": 1.0}]},
        params, threads,
    )


SEPARATIONS: dict[str, Callable[..., SeparationReport]] = {
    "naive-vs-opt": naive_vs_opt,
    "linear-vs-opt": linear_vs_opt,
    "medium-noise-opt-vs-prophet": medium_noise_opt_vs_prophet,
    "large-noise-opt-vs-random": large_noise_opt_vs_random,
    "ignore-large-approx": ignore_large_approx,
    "ignore-large-exp-approx": ignore_large_exp_approx,
}


def run_separation(name: str, params: dict | None = None, threads: int = 1) -> SeparationReport:
    try:
        fn = SEPARATIONS[name]
    except KeyError:
        raise ConfigError(f"unknown separation {name!r}; choose from {sorted(SEPARATIONS)}") from None
    return fn(params, threads)


__all__ = ["Check", "SeparationReport", "SeparationRow", "run_separation", "SEPARATIONS",
           "linear_c_grid", "medium_noise_profile"]
