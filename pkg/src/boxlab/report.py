"""Rendering results as JSON, aligned text tables and CSV."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__


def fmt(x: Any) -> str:
    """Six significant digits for reals; everything else via ``str``."""
    if isinstance(x, (bool, np.bool_)) or x is None:
        return str(x)
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable and reloadable as strings
        return v if math.isfinite(v) else str(v)
    return obj


def envelope(command: str, config: dict, seed: int | None, result: Any) -> dict[str, Any]:
    """Top-level JSON object: enough to replay ``result`` from ``config``."""
    return _jsonable({
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    })


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def table(headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Aligned columns, reals to six significant digits."""
    cells = [[str(h) for h in headers]] + [[fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def csv_text(headers: Sequence[str], rows: Iterable[Sequence[Any]], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def provenance_comments(command: str, config: dict, seed: int | None) -> list[str]:
    return [
        f"boxlab {__version__} {command}",
        f"seed {seed}",
        "config " + json.dumps(_jsonable(config), separators=(",", ":")),
    ]


# ---- per-command renderers ---------------------------------------------------


def simulation_text(estimates: list[dict], header: str = "") -> str:
    rows = [(e["name"], e["mean"], e["stderr"], e["ratio_to_prophet"], e["ratio_to_mean"])
            for e in estimates]
    out = header + "\n" if header else ""
    return out + table(["policy", "mean", "stderr", "/prophet", "/E[D]"], rows)


def trace_csv(sim_result, config: dict, seed: int) -> str:
    return csv_text(["trial", "policy", "choice", "reward"], sim_result.trace_rows(),
                    provenance_comments("simulate", config, seed))


def separation_rows(report: dict) -> tuple[list[str], list[list]]:
    headers = ["row", "n", "quantity", "value", "stderr", "compared_to"]
    rows = []
    for r in report["rows"]:
        for key, entry in r["ratios"].items():
            rows.append([r["label"], r["n"], key, entry["value"], entry["stderr"],
                         entry.get("compared_to", "")])
    return headers, rows


def check_rows(checks: list[dict]) -> tuple[list[str], list[list]]:
    headers = ["check", "value", "op", "bound", "stderr", "pass"]
    return headers, [[c["statement"], c["value"], c["op"], c["bound"], c["stderr"], c["pass"]]
                     for c in checks]


def separation_text(report: dict) -> str:
    h, rows = separation_rows(report)
    checks = [c for r in report["rows"] for c in r["checks"]] + report["checks"]
    ch, crows = check_rows(checks)
    status = "PASS" if report["pass"] else "FAIL"
    return f"{report['separation']}: {status}\n" + table(h, rows) + "\n" + table(ch, crows)


def lemma_rows(results: list[dict]) -> tuple[list[str], list[list]]:
    headers = ["lemma", "params", "lhs", "rhs", "margin", "slack", "method", "pass"]
    rows = []
    for r in results:
        p = {k: v for k, v in r["params"].items() if k != "distribution"}
        if "distribution" in r["params"]:
            p = {"D": r["params"]["distribution"].get("kind"), **p}
        rows.append([r["lemma"], json.dumps(p, separators=(",", ":")), r["lhs"], r["rhs"],
                     r["margin"], r["slack"], r["method"], r["pass"]])
    return headers, rows
