import csv
import io
import json

import numpy as np
import pytest

from boxlab import __version__
from boxlab.cli import main
from boxlab.config import spec_from_config
from boxlab.errors import ConfigError

SIM = {
    "distribution": {"kind": "halfnormal", "scale": 1.0},
    "profile": {"blocks": [{"count": 5, "sigma": 0.0}, {"count": 15, "sigma": 4.0}]},
    "policies": [{"policy": "naive"}, {"policy": "opt"}, {"policy": "ignore_large"}],
    "trials": 600,
    "seed": 11,
}


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_order_stats_example(capsys):
    assert main(["order-stats", "--dist", '{"kind":"exponential","rate":1.0}', "--m", "4"]) == 0
    assert capsys.readouterr().out.strip() == "2.08333"


def test_posterior_example(capsys):
    assert main(["posterior", "--dist", "halfnormal", "--sigma", "1", "--y", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.56419"
    assert main(["posterior", "--dist", "halfnormal", "--sigma", "1", "--y", "0", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["posterior_mean"] == pytest.approx(0.5641895835477563, rel=1e-12)
    assert out["version"] == __version__


def test_usage_errors_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["posterior", "--dist", "halfnormal", "--sigma", "1", "--y", "0", "--bogus"]) == 1
    assert main(["order-stats", "--dist", '{"kind":"exponential","rate":-1}', "--m", "4"]) == 1
    assert main(["order-stats", "--dist", "exponential", "--m", "4", "--threads", "0"]) == 1


def test_simulate_json_round_trip_and_threads(tmp_path):
    cfg = _write(tmp_path, "sim.json", SIM)
    out1, out8 = tmp_path / "a", tmp_path / "b" / "nested"
    assert main(["simulate", cfg, "--format", "json", "--threads", "1", "--out", str(out1)]) == 0
    first = json.loads((out1 / "simulate.json").read_text())
    # replay from the output file itself, with a different thread count
    assert main(["simulate", str(out1 / "simulate.json"), "--format", "json", "--threads", "8",
                 "--out", str(out8)]) == 0
    second = json.loads((out8 / "simulate.json").read_text())
    assert first == second
    assert first["seed"] == 11 and first["config"]["seed"] == 11
    assert first["config"]["benchmarks"] == ["prophet", "random"]


def test_seed_and_trials_override_are_echoed(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", SIM)
    assert main(["simulate", cfg, "--seed", "5", "--trials", "100", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["seed"] == 5 and out["config"]["seed"] == 5 and out["config"]["trials"] == 100
    assert all(e["trials"] == 100 for e in out["result"]["estimates"])


def test_simulate_csv_trace(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", SIM)
    assert main(["simulate", cfg, "--trials", "4", "--format", "csv"]) == 0
    text = capsys.readouterr().out
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    assert rows[0] == ["trial", "policy", "choice", "reward"]
    assert len(rows) == 1 + 4 * 5
    assert any(line.startswith("# config ") for line in text.splitlines())


def test_simulate_text_six_significant_digits(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", SIM)
    assert main(["simulate", cfg]) == 0
    text = capsys.readouterr().out
    for tok in text.split():
        if tok.replace(".", "", 1).isdigit() and "." in tok:
            assert len(tok.replace(".", "").lstrip("0")) <= 6


def test_config_fail_closed(tmp_path, capsys):
    bad = dict(SIM, policys=[])
    assert main(["simulate", _write(tmp_path, "bad.json", bad)]) == 1
    assert "policys" in capsys.readouterr().err
    bad = dict(SIM, profile={"blocks": [{"count": 3, "sigma": 1.0, "x": 1}]})
    assert main(["simulate", _write(tmp_path, "bad2.json", bad)]) == 1
    assert main(["simulate", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["simulate", str(tmp_path / "junk.json")]) == 1
    bad = {"distribution": "exponential", "n": 100, "overrides": {"c_bb": 3}}
    assert main(["construct", "naive-adversary", _write(tmp_path, "c.json", bad)]) == 1


def test_construction_profile_config():
    cfg = {
        "distribution": {"kind": "exponential", "rate": 1.0},
        "profile": {"construction": "linear-adversary", "n": 1000,
                    "overrides": {"c_s_exponent": 0.3, "alpha_exponent": 0.5}},
        "policies": [{"policy": "naive"}],
        "trials": 10,
        "benchmarks": ["prophet", "best_linear"],
    }
    spec = spec_from_config(cfg)
    assert spec.profile.n == 1000 and len(spec.c_grid) == 64 and spec.c_grid[0] == 0.0
    assert spec.to_config()["profile"]["overrides"] == {"c_s_exponent": 0.3, "alpha_exponent": 0.5}
    with pytest.raises(ConfigError):
        spec_from_config(dict(cfg, profile={"sigma": [0, 1], "n": 2}))
    with pytest.raises(ConfigError):
        spec_from_config(dict(cfg, profile={"sigma": [0, 1], "blocks": []}))


def test_construct_command(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", {"distribution": {"kind": "twopoint", "value": 1000, "p": 0.001}, "n": 1000})
    assert main(["construct", "naive-adversary", cfg, "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["construction"]["params"]["large_count"] == 41
    assert out["result"]["regimes"][0]["small_noise"] is True


def test_separation_command(tmp_path, capsys):
    cfg = _write(tmp_path, "s.json", {"n": [200], "trials": 500})
    assert main(["separation", "naive-vs-opt", cfg, "--seed", "2", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["seed"] == 2 and out["config"]["seed"] == 2
    assert out["config"]["separation"] == "naive-vs-opt"
    bad = _write(tmp_path, "b.json", {"n": [200], "trails": 5})
    assert main(["separation", "naive-vs-opt", bad]) == 1


def test_verify_exit_codes(tmp_path, capsys):
    good = _write(tmp_path, "v.json", {"distributions": ["exponential"], "n_grid": [4, 8], "trials": 2000,
                                      "suite": ["gordon", "order-stat-mean", "mhr-max-concentration"]})
    assert main(["verify", good]) == 0
    bad = _write(tmp_path, "f.json", {"distributions": [{"kind": "twopoint", "value": 1, "p": 0.1}],
                                     "suite": ["cai-daskalakis-alpha"]})
    assert main(["verify", bad]) == 3
    capsys.readouterr()


def test_numerical_failure_exit_2(monkeypatch, capsys):
    from boxlab import cli
    from boxlab.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("integral did not converge")

    monkeypatch.setattr(cli, "order_stat_max_mean", boom)
    assert main(["order-stats", "--dist", "exponential", "--m", "3"]) == 2
    assert "numerical" in capsys.readouterr().err
