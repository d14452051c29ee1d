import csv
import json
import math

import pytest

import oracles as orc
from hardycrit.cli import comparable, main
from hardycrit.config import parse_config
from hardycrit.errors import ConfigError

GS4 = """
experiment: verify-groundstate
problem: {N: 4, A_over_Lambda: 0.5}
sweep: {mu: [0.1, 1.0, 10.0]}
"""
POHOZAEV = """
experiment: pohozaev-audit
problem:
  N: 3
  A_over_Lambda: 0.5
  h: {preset: radial_power, params: {amplitude: 5e-2, exponent: 1}}
"""
SOLVE = """
experiment: solve
problem: {N: 3, A: 1.0e-1}
solver: {tolerance: 1e-8}
init: {profile: talenti, mu: 2}
output: {fields: true}
"""
HYP_K1 = """
experiment: hypotheses
problem:
  N: 3
  A: 0.05
  k: {preset: k1_example, params: {theta: 2.5}}
sweep: {delta: [0.05, 0.001]}
"""
THRESH = """
experiment: thresholds
problem:
  N: 3
  lambda: 0.05
  k: {preset: two_peak, params: {a1: [2, 0, 0], a2: [-2, 0, 0], theta: 2.5, width: 0.3}}
sweep: {lambda: [0.01, 0.1, 0.2]}
"""


def run_cli(tmp_path, text, name, *extra):
    cfg = tmp_path / f"{name}.yaml"
    cfg.write_text(text)
    out = tmp_path / f"out_{name}"
    tag = parse_config(text).experiment
    code = main([tag, "--config", str(cfg), "--out", str(out), *extra])
    summary = json.loads((out / "summary.json").read_text()) if (out / "summary.json").exists() else None
    return code, summary, out


def test_verify_groundstate(tmp_path):
    code, s, out = run_cli(tmp_path, GS4, "gs")
    assert code == 0 and s["status"]["label"] == "ok"
    for p in s["result"]["points"]:
        assert p["residual"] <= 1e-6
        assert p["quotient"] == pytest.approx(orc.groundstate_quotient(4, 0.5), rel=1e-4)
    assert s["config"]["problem"]["A"] == 0.5
    assert set(s["versions"]["modules"]) >= {"solver", "localization", "cli"}
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["A", "mu", "quotient", "expected", "quotient_rel_err", "residual", "level",
                       "level_expected", "level_rel_err"]
    assert len(rows) == 4
    # 17 significant digits round-trip exactly
    assert float(rows[1][2]) == s["result"]["points"][0]["quotient"]


def test_pohozaev_exit_code(tmp_path):
    code, s, _ = run_cli(tmp_path, POHOZAEV, "poh")
    assert code == 3
    assert s["result"]["verdict"] == "PohozaevObstruction"
    assert s["result"]["witness_value"] > 0


def test_solve_writes_trace_and_field(tmp_path):
    code, s, out = run_cli(tmp_path, SOLVE, "solve")
    assert code == 0 and s["result"]["converged"]
    with open(out / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["iteration", "J", "residual", "t", "mu", "center_offset", "T"]
    assert float(rows[-1]["residual"]) <= 1e-8
    field = json.loads((out / "fields" / "solution.json").read_text())
    assert field["N"] == 3


def test_hypotheses_failure_and_category(tmp_path):
    code, s, _ = run_cli(tmp_path, HYP_K1, "hyp")
    assert code == 3
    assert s["result"]["k"]["K1"]["passed"] is False
    m = [c["m"] for c in s["result"]["category"]]
    assert m[0] < m[1]


def test_thresholds_sweep(tmp_path):
    code, s, _ = run_cli(tmp_path, THRESH, "thr")
    assert code == 0
    rows = s["result"]["sweep"]
    assert rows[0]["positivity_gate"] is True and rows[2]["positivity_gate"] is False
    assert rows[0]["tilde_c"] == pytest.approx(orc.tilde_c_sup(3, 1.0), rel=1e-10)
    assert s["result"]["report"]["eps0"] == pytest.approx(orc.eps0_cap(3), rel=1e-11)


def test_nonconvergence_exit_code(tmp_path):
    text = SOLVE.replace("tolerance: 1e-8", "tolerance: 1e-8, max_iterations: 1")
    code, s, _ = run_cli(tmp_path, text, "nc")
    assert code == 4 and s["status"]["label"] == "non-convergence"


def test_hypothesis_error_exit_code(tmp_path):
    text = SOLVE.replace("problem: {N: 3, A: 1.0e-1}",
                         "problem: {N: 3, A: 0.1, h: {preset: constant, params: {value: -0.2}}}")
    code, s, _ = run_cli(tmp_path, text, "hv")
    assert code == 3 and s["result"]["error"] == "HypothesisViolated"


def test_determinism_and_workers(tmp_path):
    a = run_cli(tmp_path, GS4, "a")[1]
    b = run_cli(tmp_path, GS4, "b", "--workers", "2")[1]
    assert json.dumps(comparable(a), sort_keys=True) == json.dumps(comparable(b), sort_keys=True)
    assert (tmp_path / "out_a" / "summary.json").read_bytes() != b""


def test_output_env_override(tmp_path, monkeypatch):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(GS4)
    monkeypatch.setenv("HARDYCRIT_OUT", str(tmp_path / "env_out"))
    assert main(["verify-groundstate", "--config", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "summary.json").exists()


@pytest.mark.parametrize("text,fragment", [
    ("experiment: solve\nproblem: {N: 3, A: [1, 2\n", "line 3"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1}\nbogus: 1\n", "unknown keys"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1, lambda: 0.1}\n", "only one of"),
    ("experiment: solve\nproblem: {N: 2, A: 0.1}\n", "problem.N"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1}\nsweep: {mu: []}\n", "sweep.mu"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1, k: {preset: nope}}\n", "problem.k"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1}\nsolver: {backstep: 2}\n", "solver"),
    ("experiment: solve\nproblem: {N: 3, A: 0.1}\ngrid: {M: abc}\n", "grid.M"),
    ("experiment: nope\nproblem: {N: 3, A: 0.1}\n", "experiment"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", r"\[")):
        parse_config(text)


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: solve\nproblem: {N: 3, A: [1, 2\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "line 3" in capsys.readouterr().err
    cfg.write_text(GS4)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_scientific_notation_strings():
    cfg = parse_config("experiment: solve\nproblem: {N: 3, A: 1e-1}\ngrid: {r_min: 1e-7, M: 1.5e3}\n")
    assert cfg.A == 0.1 and cfg.grid["r_min"] == 1e-7 and cfg.grid["M"] == 1500


def test_jsonable_handles_infinities():
    from hardycrit.cli import jsonable
    assert jsonable({"a": math.inf, "b": (1, -math.inf), "c": {2, 1}}) == {"a": "inf", "b": [1, "-inf"], "c": [1, 2]}
