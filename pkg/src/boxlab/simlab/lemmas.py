"""Numerical verification of the inequalities the analysis relies on.

Each check states an inequality ``lhs <= rhs`` at one parameter point (or the
worst point of a grid), evaluates both sides by the cheapest sound method
(closed form, then quadrature, then Monte Carlo) and records
``margin = rhs - lhs``. A check passes when ``margin >= -slack``; the slack
is three standard errors for Monte Carlo checks and a stated absolute
tolerance otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from .._numeric import normal_cdf, normal_logcdf, normal_pdf
from ..distributions import HalfNormal, MaxOf, RewardDistribution, Truncated
from ..distributions import from_config as dist_from_config
from ..errors import ConfigError
from ..orderstats import (
    alpha_quantile,
    gaussian_max_log_cdf,
    gaussian_max_tail,
    hazard_profile,
    order_stat_max_mean,
    tail_contribution,
)
from ..posterior import (
    posterior_mean,
    posterior_mean_exponential,
    posterior_mean_halfnormal,
    posterior_upper_bound_halfnormal,
    truncated_posterior_mean,
)
from ..regimes import DEFAULT_C_S_EXPONENT, construct_naive_adversary
from .montecarlo import trial_generator

LEMMA_IDS = (
    "gordon",
    "compare-order-stats",
    "mhr-max-concentration",
    "order-stat-vs-quantile",
    "cai-daskalakis-alpha",
    "order-stat-order-stat",
    "order-stat-mean",
    "half-norm-order-stats",
    "posterior-monotonicity",
    "posterior-closed-form",
    "posterior-U-bound",
    "bounded-posterior",
    "tail-product",
    "barlow-quantile",
    "event-probabilities",
)

DEFAULT_PARAMS: dict[str, Any] = {
    "distributions": [{"kind": "exponential", "rate": 1.0}, {"kind": "halfnormal", "scale": 1.0}],
    "n_grid": [4, 8, 16, 32, 64, 128, 256],
    "trials": 100_000,
    "seed": 0,
}

# relative tolerance for deterministic checks (closed form / quadrature)
REL_TOL = 1e-9


@dataclass
class LemmaCheckResult:
    lemma: str
    params: dict[str, Any]
    lhs: float
    rhs: float
    margin: float
    slack: float
    passed: bool
    method: str
    trials: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "slack": self.slack,
            "pass": self.passed,
            "method": self.method,
            "trials": self.trials,
            "details": self.details,
        }


def _result(lemma, params, lhs, rhs, method, slack=None, trials=None, **details):
    lhs = float(lhs)
    rhs = float(rhs)
    if slack is None:
        slack = REL_TOL * max(abs(lhs), abs(rhs), 1e-300)
    margin = rhs - lhs
    return LemmaCheckResult(lemma, params, lhs, rhs, margin, float(slack), bool(margin >= -slack),
                            method, trials, details)


def _worst(lemma, params, pairs: Iterable[tuple[float, float, dict]], method: str,
           rel_tol: float = REL_TOL, abs_tol: float = 0.0) -> LemmaCheckResult:
    """Collapse a grid of ``(lhs, rhs, point)`` into its tightest point."""
    best = None
    count = 0
    for lhs, rhs, point in pairs:
        count += 1
        slack = rel_tol * max(abs(lhs), abs(rhs)) + abs_tol
        score = (rhs - lhs) + slack
        if best is None or score < best[0]:
            best = (score, lhs, rhs, slack, point)
    if best is None:
        raise ConfigError(f"{lemma}: empty parameter grid")
    _, lhs, rhs, slack, point = best
    res = _result(lemma, {**params, "worst_point": point}, lhs, rhs, method, slack=slack)
    res.details["grid_points"] = count
    return res


def _kind_method(dist: RewardDistribution) -> str:
    return "exact" if dist.kind in ("exponential", "uniform", "pointmass", "twopoint") else "quadrature"


# ---- individual checks ------------------------------------------------------


def check_gordon(ctx) -> list[LemmaCheckResult]:
    """``1 - phi(t)/t <= Phi(t) <= 1 - t phi(t)/(t^2 + 1)`` on ``t`` in (0, 10].

    Compared in tail form, ``t phi/(t^2+1) <= 1 - Phi(t) <= phi/t``, so the
    far tail is not lost to cancellation.
    """
    t = np.linspace(0.01, 10.0, 1000)
    tail = normal_cdf(-t)
    phi = normal_pdf(t)
    lower = ((tail[i], phi[i] / t[i], {"t": float(t[i])}) for i in range(t.size))
    upper = ((t[i] * phi[i] / (t[i] ** 2 + 1), tail[i], {"t": float(t[i])}) for i in range(t.size))
    return [
        _worst("gordon", {"side": "lower: 1 - Phi(t) <= phi(t)/t"}, lower, "exact", rel_tol=1e-12),
        _worst("gordon", {"side": "upper: t phi(t)/(t^2+1) <= 1 - Phi(t)"}, upper, "exact", rel_tol=1e-12),
    ]


def check_compare_order_stats(ctx) -> list[LemmaCheckResult]:
    """``E[D_(b:b)]/b <= E[D_(a:a)]/a`` for ``a < b``; consecutive pairs suffice."""
    out = []
    top = max(ctx.n_grid)
    for dist in ctx.dists:
        e = np.array([order_stat_max_mean(dist, m) for m in range(1, top + 1)])
        per = e / np.arange(1, top + 1)
        pairs = ((per[i + 1], per[i], {"a": i + 1, "b": i + 2}) for i in range(top - 1))
        out.append(_worst("compare-order-stats", {"distribution": dist.to_config(), "m_max": top},
                          pairs, _kind_method(dist)))
    return out


def check_mhr_max_concentration(ctx) -> list[LemmaCheckResult]:
    """``1 - n^(-3/5) <= Pr[D_(n:n) < 2 E[D_(n:n)]]`` for ``n >= 4``, by sampling."""
    out = []
    for j, dist in enumerate(ctx.dists):
        for n in ctx.n_grid:
            if n < 4:
                continue
            e_max = order_stat_max_mean(dist, n)
            rng = trial_generator(ctx.seed, n, stream=1000 + j)
            hits = 0
            remaining = ctx.trials
            while remaining:
                rows = min(remaining, max(1, 2_000_000 // n))
                hits += int(np.count_nonzero(dist.sample(rng, (rows, n)).max(axis=1) < 2 * e_max))
                remaining -= rows
            p = hits / ctx.trials
            se = math.sqrt(max(p * (1 - p), 1.0 / ctx.trials) / ctx.trials)
            exact = float(MaxOf(dist, n).cdf(2 * e_max))
            out.append(_result(
                "mhr-max-concentration", {"distribution": dist.to_config(), "n": n},
                1.0 - n ** (-0.6), p, "monte-carlo", slack=3 * se, trials=ctx.trials,
                stderr=se, exact_probability=exact,
            ))
    return out


def check_order_stat_vs_quantile(ctx) -> list[LemmaCheckResult]:
    """``E[D_(n:n)]/3 <= alpha_n <= 5/4 E[D_(n:n)]`` for ``n >= 4``."""
    out = []
    for dist in ctx.dists:
        for n in ctx.n_grid:
            if n < 4:
                continue
            e_max = order_stat_max_mean(dist, n)
            a = alpha_quantile(dist, n)
            p = {"distribution": dist.to_config(), "n": n}
            out.append(_result("order-stat-vs-quantile", {**p, "side": "lower"}, e_max / 3, a,
                               _kind_method(dist)))
            out.append(_result("order-stat-vs-quantile", {**p, "side": "upper"}, a, 1.25 * e_max,
                               _kind_method(dist)))
    return out


def check_cai_daskalakis_alpha(ctx) -> list[LemmaCheckResult]:
    """``alpha_(m^d) <= d alpha_m`` for MHR laws, ``m, d >= 1``."""
    ms = [1.0, 1.5, 2.0, *[float(n) for n in ctx.n_grid]]
    ds = [1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0]
    out = []
    for dist in ctx.dists:
        pairs = (
            (alpha_quantile(dist, m**d), d * alpha_quantile(dist, m), {"m": m, "d": d})
            for m in ms for d in ds
        )
        out.append(_worst("cai-daskalakis-alpha", {"distribution": dist.to_config()}, pairs, "exact",
                          abs_tol=1e-12))
    return out


def check_order_stat_order_stat(ctx) -> list[LemmaCheckResult]:
    """``E[D_(n^a:n^a)] <= 4a E[D_(n:n)]`` for ``n >= 4``, ``a >= 1``."""
    out = []
    for dist in ctx.dists:
        pairs = (
            (order_stat_max_mean(dist, float(n) ** a), 4 * a * order_stat_max_mean(dist, n),
             {"n": n, "a": a})
            for n in ctx.n_grid if n >= 4 for a in (1.0, 1.5, 2.0, 3.0)
        )
        out.append(_worst("order-stat-order-stat", {"distribution": dist.to_config()}, pairs,
                          _kind_method(dist)))
    return out


def check_order_stat_mean(ctx) -> list[LemmaCheckResult]:
    """``E[D_(n:n)] <= (ln n + 1) E[D]`` for MHR ``D``, all ``n >= 1``."""
    out = []
    for dist in ctx.dists:
        mean = dist.mean()
        pairs = (
            (order_stat_max_mean(dist, n), (math.log(n) + 1) * mean, {"n": n})
            for n in range(1, max(ctx.n_grid) + 1)
        )
        out.append(_worst("order-stat-mean", {"distribution": dist.to_config()}, pairs,
                          _kind_method(dist)))
    return out


def check_half_norm_order_stats(ctx) -> list[LemmaCheckResult]:
    """Half-normal facts: MHR, mean sqrt(2/pi), and
    ``4/5 sqrt(ln n) <= E[D_(n:n)] <= 3 sqrt(2) sqrt(ln n)`` for ``n >= 8``."""
    hn = HalfNormal(1.0)
    ns = range(8, max(max(ctx.n_grid), 8) + 1)
    e = {n: order_stat_max_mean(hn, n) for n in ns}
    mean_quad = order_stat_max_mean(hn, 1)
    out = [
        _worst("half-norm-order-stats", {"side": "lower"},
               ((0.8 * math.sqrt(math.log(n)), e[n], {"n": n}) for n in ns), "quadrature"),
        _worst("half-norm-order-stats", {"side": "upper"},
               ((e[n], 3 * math.sqrt(2) * math.sqrt(math.log(n)), {"n": n}) for n in ns), "quadrature"),
    ]
    diff = abs(mean_quad - math.sqrt(2 / math.pi))
    out.append(_result("half-norm-order-stats", {"side": "mean equals sqrt(2/pi)"}, diff, 1e-10,
                       "quadrature", slack=0.0, mean=mean_quad))
    mhr = hn.is_mhr() and bool(hazard_profile(hn).is_mhr)
    out.append(_result("half-norm-order-stats", {"side": "hazard rate non-decreasing"},
                       0.0 if mhr else 1.0, 0.0, "exact", slack=0.0))
    return out


def _y_grid(dist: RewardDistribution, points: int = 200) -> np.ndarray:
    scale = max(1.0, dist.mean())
    return np.linspace(-10.0, 10.0, points) * scale


def check_posterior_monotonicity(ctx) -> list[LemmaCheckResult]:
    """Posterior mean non-decreasing in ``y`` (differences >= -1e-7 scale)."""
    out = []
    for dist in ctx.dists:
        for s in (0.1, 1.0, 10.0):
            ys = _y_grid(dist)
            vals = np.array([posterior_mean(dist, s, y) for y in ys])
            d = np.diff(vals)
            i = int(np.argmin(d))
            scale = max(1.0, float(np.max(np.abs(vals))))
            out.append(_result(
                "posterior-monotonicity", {"distribution": dist.to_config(), "sigma": s,
                                           "worst_y": float(ys[i + 1])},
                0.0, float(d[i]), "quadrature", slack=1e-7 * scale,
            ))
    return out


def check_posterior_closed_form(ctx) -> list[LemmaCheckResult]:
    """Closed-form posterior means agree with quadrature to 1e-6 absolute."""
    out = []
    forms: list[tuple[RewardDistribution, Callable]] = [(HalfNormal(1.0), posterior_mean_halfnormal)]
    for dist in ctx.dists:
        if dist.kind == "exponential":
            forms.append((dist, lambda s, y, r=dist.rate: posterior_mean_exponential(s, y, r)))
    ys = np.linspace(-10.0, 10.0, 201)
    for dist, closed in forms:
        pairs = (
            (abs(closed(s, y) - posterior_mean(dist, s, y)), 1e-6, {"sigma": s, "y": float(y)})
            for s in (0.1, 0.5, 1.0, 2.0, 10.0) for y in ys
        )
        out.append(_worst("posterior-closed-form", {"distribution": dist.to_config()}, pairs,
                          "quadrature", rel_tol=0.0))
    return out


def check_posterior_u_bound(ctx) -> list[LemmaCheckResult]:
    """Half-normal posterior mean never exceeds ``sqrt(2/pi) + max(0, y/(sigma^2+1))``."""
    sig = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0])
    ys = np.linspace(-50.0, 50.0, 401)
    S, Y = np.meshgrid(sig, ys)
    closed = posterior_mean_halfnormal(S, Y)
    bound = posterior_upper_bound_halfnormal(S, Y)
    pairs = ((closed.flat[i], bound.flat[i], {"sigma": float(S.flat[i]), "y": float(Y.flat[i])})
             for i in range(closed.size))
    return [_worst("posterior-U-bound", {"distribution": HalfNormal(1.0).to_config()}, pairs, "exact",
                   rel_tol=1e-12)]


def check_bounded_posterior(ctx) -> list[LemmaCheckResult]:
    """For ``Z`` on ``[0, V]``, ``sigma > 2V`` and ``y <= sigma^2/(2V)``:
    ``E[Z | Z + N(0, sigma^2) = y] <= 2 E[Z]``."""
    out = []
    for dist in ctx.dists:
        def pairs():
            for v_q in (0.5, 0.9, 0.99):
                V = float(dist.quantile(v_q))
                ez = Truncated(dist, V).mean()
                for k in (2.05, 4.0, 10.0):
                    s = k * V
                    for y in np.linspace(-3 * s, s * s / (2 * V), 12):
                        yield (truncated_posterior_mean(dist, V, s, float(y)), 2 * ez,
                               {"V": V, "sigma": s, "y": float(y)})
        out.append(_worst("bounded-posterior", {"distribution": dist.to_config()}, pairs(),
                          "quadrature", rel_tol=1e-7))
    return out


def check_tail_product(ctx) -> list[LemmaCheckResult]:
    """``E[D_(n:n); D_(n:n) > alpha_m(D_(n:n))] <= 15 (ln m + ln n + 1) E[D] / (2m)``."""
    out = []
    for dist in ctx.dists:
        mean = dist.mean()

        def pairs():
            for n in ctx.n_grid:
                mx = MaxOf(dist, n)
                for m in (2, 4, 16, 256):
                    a = alpha_quantile(mx, m)
                    lhs = tail_contribution(mx, a)
                    rhs = 15 * (math.log(m) + math.log(n) + 1) * mean / (2 * m)
                    yield lhs, rhs, {"n": n, "m": m}
        out.append(_worst("tail-product", {"distribution": dist.to_config()}, pairs(), "quadrature",
                          rel_tol=1e-7))
    return out


def check_barlow_quantile(ctx) -> list[LemmaCheckResult]:
    """For MHR ``X`` with mean ``mu`` and ``p <= 1 - 1/e``:
    ``-ln(1-p) mu <= quantile_p(X) <= -ln(1-p)/p mu``; applied to ``D`` and ``D_(n:n)``."""
    ps = np.linspace(0.01, 1 - 1 / math.e, 25)
    out = []
    for dist in ctx.dists:
        laws = [(1, dist)] + [(n, MaxOf(dist, n)) for n in ctx.n_grid]
        for side in ("lower", "upper"):
            def pairs():
                for n, law in laws:
                    mu = law.mean()
                    for p in ps:
                        q = float(law.quantile(p))
                        g = -math.log1p(-p)
                        if side == "lower":
                            yield g * mu, q, {"n": n, "p": float(p)}
                        else:
                            yield q, g / p * mu, {"n": n, "p": float(p)}
            out.append(_worst("barlow-quantile", {"distribution": dist.to_config(), "side": side},
                              pairs(), _kind_method(dist), rel_tol=1e-8))
    return out


def check_event_probabilities(ctx) -> list[LemmaCheckResult]:
    """Gaussian-maximum events used in the adversarial constructions.

    Naive construction (``n`` on the grid where it is defined):
      * some noisy box has ``eps > beta``: ``Pr[all <= beta] <= n^-3``;
      * one noisy box has ``eps <= 12 beta ln n`` w.p. ``>= 1 - n^-2``.
    Linear construction with its original constants, which only hold for
    astronomically large ``n``; evaluated in log space at ``ln n = 1e7, 1e8``:
      * small boxes: ``Pr[max eps > theta sigma_s / 37] <= 1/ln n``;
      * large boxes: ``Pr[max eps < (theta + 1) sigma_b] <= 1/ln n``.
    """
    out = []
    for dist in ctx.dists:
        for n in ctx.n_grid:
            if round(6 * math.log(n)) >= n:
                continue
            cons = construct_naive_adversary(dist, n)
            beta = cons.params["beta_max_n2"]
            sb = cons.params["sigma_b"]
            cb = cons.params["large_count"]
            p = {"distribution": dist.to_config(), "n": n}
            out.append(_result("event-probabilities", {**p, "event": "naive: max eps over noisy boxes <= beta"},
                               gaussian_max_tail(cb, sb, beta), n ** -3.0, "exact"))
            out.append(_result("event-probabilities", {**p, "event": "naive: eps > 12 beta ln n"},
                               1.0 - gaussian_max_tail(1, sb, 12 * beta * math.log(n)), n ** -2.0,
                               "exact"))
    for log_n in (1e7, 1e8):
        theta = math.sqrt(log_n / 2)
        log_cs = log_n * DEFAULT_C_S_EXPONENT
        # small tier: eps_i / sigma_s <= theta / 37 for all c_s boxes
        lc = gaussian_max_log_cdf(log_cs, 1.0, theta / 37.0)
        out.append(_result("event-probabilities",
                           {"ln_n": log_n, "event": "linear: max eps over small boxes > theta sigma_s/37"},
                           -math.expm1(lc), 1.0 / log_n, "exact"))
        # large tier: n - c_s - 1 ~ n boxes, need max eps / sigma_b >= theta + 1
        log_m = log_n + math.log1p(-math.exp(log_cs - log_n) - math.exp(-log_n))
        lc = gaussian_max_log_cdf(log_m, 1.0, theta + 1.0)
        out.append(_result("event-probabilities",
                           {"ln_n": log_n, "event": "linear: max eps over large boxes < (theta+1) sigma_b"},
                           math.exp(lc), 1.0 / log_n, "exact", log_probability=lc,
                           log_minus_log_probability=log_m + float(normal_logcdf(-(theta + 1.0)))))
    return out


CHECKS: dict[str, Callable] = {
    "gordon": check_gordon,
    "compare-order-stats": check_compare_order_stats,
    "mhr-max-concentration": check_mhr_max_concentration,
    "order-stat-vs-quantile": check_order_stat_vs_quantile,
    "cai-daskalakis-alpha": check_cai_daskalakis_alpha,
    "order-stat-order-stat": check_order_stat_order_stat,
    "order-stat-mean": check_order_stat_mean,
    "half-norm-order-stats": check_half_norm_order_stats,
    "posterior-monotonicity": check_posterior_monotonicity,
    "posterior-closed-form": check_posterior_closed_form,
    "posterior-U-bound": check_posterior_u_bound,
    "bounded-posterior": check_bounded_posterior,
    "tail-product": check_tail_product,
    "barlow-quantile": check_barlow_quantile,
    "event-probabilities": check_event_probabilities,
}


@dataclass
class _Context:
    dists: list[RewardDistribution]
    n_grid: list[int]
    trials: int
    seed: int


def resolve_params(params: dict | None) -> dict:
    params = dict(params or {})
    extra = set(params) - set(DEFAULT_PARAMS) - {"suite"}
    if extra:
        raise ConfigError(f"unknown verify parameters {sorted(extra)}")
    out = {k: v for k, v in DEFAULT_PARAMS.items()}
    out.update(params)
    out.setdefault("suite", list(LEMMA_IDS))
    return out


def verify_lemmas(suite: Iterable[str] | None = None, params: dict | None = None) -> list[LemmaCheckResult]:
    """Run the requested checks (default: all fifteen)."""
    p = resolve_params(params)
    suite = list(suite) if suite is not None else list(p["suite"])
    unknown = [s for s in suite if s not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown lemma ids {unknown}; choose from {list(LEMMA_IDS)}")
    n_grid = sorted(int(n) for n in p["n_grid"])
    if not n_grid or n_grid[0] < 1:
        raise ConfigError("n_grid must contain positive integers")
    trials = int(p["trials"])
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    ctx = _Context([dist_from_config(d) for d in p["distributions"]], n_grid, trials, int(p["seed"]))
    results: list[LemmaCheckResult] = []
    for lemma in suite:
        results.extend(CHECKS[lemma](ctx))
    return results
