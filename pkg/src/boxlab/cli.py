"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure,
3 when ``verify`` reports a failing check.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from . import report as rp
from .config import load_json, parse_json_arg, spec_from_config
from .distributions import from_config as dist_from_config
from .errors import ConfigError, NumericalError
from .orderstats import alpha_quantile, beta_threshold, order_stat_max_mean
from .posterior import posterior_mean_or_fallback
from .regimes import DEFAULT_C_S_EXPONENT, build_construction, classify
from .simlab.lemmas import resolve_params, verify_lemmas
from .simlab.montecarlo import SimulationError, simulate
from .simlab.separations import SEPARATIONS, run_separation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--trials", type=int, help="override the config trial count")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores); results do not depend on it")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out", type=Path, help="directory for output files (created if absent)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="boxlab", description="Selecting the best box from noisy observations.")
    parser.add_argument("--version", action="version", version=f"boxlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of policy rewards")
    s.add_argument("config", type=Path)

    s = sub.add_parser("separation", parents=[common], help="run a separation experiment")
    s.add_argument("name", choices=sorted(SEPARATIONS))
    s.add_argument("config", type=Path, nargs="?", help="JSON parameters (defaults if omitted)")

    s = sub.add_parser("verify", parents=[common], help="numerically verify the lemma suite")
    s.add_argument("config", type=Path, nargs="?", help="JSON parameters (defaults if omitted)")

    s = sub.add_parser("construct", parents=[common], help="build an adversarial noise profile")
    s.add_argument("kind", choices=("naive-adversary", "linear-adversary"))
    s.add_argument("config", type=Path)

    s = sub.add_parser("posterior", parents=[common], help="posterior mean E[X | X + N(0, sigma^2) = y]")
    s.add_argument("--dist", required=True, help="distribution JSON or kind name")
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--y", type=float, required=True)

    s = sub.add_parser("order-stats", parents=[common], help="E[max of m draws], alpha_m and beta_m")
    s.add_argument("--dist", required=True, help="distribution JSON or kind name")
    s.add_argument("--m", type=float, required=True)
    return parser


def _threads(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


def _emit(args, stem: str, text: str, suffix: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{stem}.{suffix}"
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}", file=sys.stderr)


def _render(args, stem: str, payload: dict, text: str, csv_table: tuple[list, list] | None) -> None:
    if args.format == "json":
        _emit(args, stem, rp.to_json(payload), "json")
    elif args.format == "csv":
        headers, rows = csv_table
        comments = rp.provenance_comments(payload["command"], payload["config"], payload["seed"])
        _emit(args, stem, rp.csv_text(headers, rows, comments), "csv")
    else:
        _emit(args, stem, text, "txt")


def _params_file(path: Path | None) -> dict[str, Any]:
    return {} if path is None else load_json(path)


# ---- subcommands -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    spec = spec_from_config(load_json(args.config), args.seed, args.trials)
    res = simulate(spec, _threads(args))
    cfg = spec.to_config()
    estimates = [e.to_dict() for e in res.estimates()]
    result: dict[str, Any] = {"estimates": estimates, "fallbacks": res.fallbacks}
    if spec.construction is not None:
        result["construction"] = spec.construction.to_dict()["params"]
    payload = rp.envelope("simulate", cfg, spec.seed, result)
    if args.format == "csv":
        _emit(args, "trace", rp.trace_csv(res, payload["config"], spec.seed), "csv")
        return EXIT_OK
    header = f"n={spec.n} trials={spec.trials} seed={spec.seed}"
    _render(args, "simulate", payload, rp.simulation_text(payload["result"]["estimates"], header), None)
    return EXIT_OK


def cmd_separation(args) -> int:
    params = _params_file(args.config)
    if args.seed is not None:
        params["seed"] = args.seed
    if args.trials is not None:
        params["trials"] = args.trials
    rep = run_separation(args.name, params, _threads(args))
    d = rep.to_dict()
    payload = rp.envelope("separation", {"separation": args.name, **rep.params}, rep.params.get("seed"), d)
    _render(args, args.name, payload, rp.separation_text(payload["result"]),
            rp.separation_rows(payload["result"]))
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params_file(args.config)
    if args.seed is not None:
        params["seed"] = args.seed
    if args.trials is not None:
        params["trials"] = args.trials
    resolved = resolve_params(params)
    results = verify_lemmas(params=resolved)
    dicts = [r.to_dict() for r in results]
    failed = sum(not r.passed for r in results)
    payload = rp.envelope("verify", resolved, resolved["seed"],
                          {"checks": dicts, "failed": failed, "total": len(dicts)})
    h, rows = rp.lemma_rows(payload["result"]["checks"])
    text = rp.table(h, rows) + f"\n{len(dicts) - failed}/{len(dicts)} checks passed\n"
    _render(args, "verify", payload, text, (h, rows))
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_construct(args) -> int:
    cfg = dict(_params_file(args.config))
    extra = set(cfg) - {"distribution", "n", "overrides", "c"}
    if extra:
        raise ConfigError(f"unknown construct keys {sorted(extra)}")
    if "distribution" not in cfg or "n" not in cfg:
        raise ConfigError("construct config needs 'distribution' and 'n'")
    dist = dist_from_config(cfg["distribution"])
    n = int(cfg["n"])
    cons = build_construction(args.kind, dist, n, cfg.get("overrides"))
    if "c" in cfg:
        cs = cfg["c"] if isinstance(cfg["c"], list) else [cfg["c"]]
    elif args.kind == "naive-adversary":
        cs = [cons.params["exact_count"] / n]
    else:
        cs = [float(cons.overrides.get("c_s_exponent", DEFAULT_C_S_EXPONENT))]
    regimes = [classify(dist, n, float(c), cons.profile).to_dict() for c in cs]
    resolved = {"construction": args.kind, "distribution": dist.to_config(), "n": n,
                "overrides": dict(cons.overrides), "c": [float(c) for c in cs]}
    payload = rp.envelope("construct", resolved, None,
                          {"construction": cons.to_dict(), "regimes": regimes})
    res = payload["result"]
    prow = [[k, v] for k, v in res["construction"]["params"].items()]
    blocks = [[b["count"], b["sigma"]] for b in res["construction"]["profile"]["blocks"]]
    keys = ["c", "small_noise", "small_noise_mhr", "medium_noise", "large_noise"]
    rrows = [[r[k] for k in keys] for r in res["regimes"]]
    text = (f"{args.kind} n={n} constants={res['construction']['constants']}\n"
            + rp.table(["param", "value"], prow) + "\n"
            + rp.table(["count", "sigma"], blocks) + "\n"
            + rp.table(keys, rrows))
    _render(args, args.kind, payload, text, (["count", "sigma"], blocks))
    return EXIT_OK


def cmd_posterior(args) -> int:
    dist = dist_from_config(parse_json_arg(args.dist))
    value, fell_back = posterior_mean_or_fallback(dist, args.sigma, args.y)
    cfg = {"distribution": dist.to_config(), "sigma": args.sigma, "y": args.y}
    payload = rp.envelope("posterior", cfg, None, {"posterior_mean": value, "fallback": fell_back})
    text = rp.fmt(value) + (" (fallback: nearest support point)" if fell_back else "") + "\n"
    _render(args, "posterior", payload, text, (["sigma", "y", "posterior_mean"], [[args.sigma, args.y, value]]))
    return EXIT_OK


def cmd_order_stats(args) -> int:
    dist = dist_from_config(parse_json_arg(args.dist))
    m = args.m
    mean = order_stat_max_mean(dist, m)
    alpha = alpha_quantile(dist, m)
    beta = beta_threshold(dist, m)
    cfg = {"distribution": dist.to_config(), "m": m}
    payload = rp.envelope("order-stats", cfg, None,
                          {"expected_max": mean, "alpha": alpha, "beta": beta})
    _render(args, "order-stats", payload, rp.fmt(mean) + "\n",
            (["m", "expected_max", "alpha", "beta"], [[m, mean, alpha, beta]]))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "separation": cmd_separation,
    "verify": cmd_verify,
    "construct": cmd_construct,
    "posterior": cmd_posterior,
    "order-stats": cmd_order_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("boxlab: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"boxlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SimulationError, ArithmeticError) as exc:
        print(f"boxlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    _entry()
