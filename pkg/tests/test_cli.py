import json
import math
import subprocess
import sys

import numpy as np
import pytest

from seqgibbs.cli import EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INVARIANT, EXIT_OK, main
from seqgibbs.config import ConfigError, ExperimentConfig
from seqgibbs.report import Report, emit_csv, emit_json, format_value

LUMP = {
    "potential": {"kind": "locally_constant",
                  "transition_matrix": [[0.2, 0.3, 0.5], [0.4, 0.1, 0.5], [0.3, 0.3, 0.4]]},
    "factor": {"q1": 3, "q2": 2, "table": [0, 0, 1]},
}
HOF = {"potential": {"kind": "renewal", "a0": 0.0, "formula": "log_ratio", "params": {"c": 2.0}}}


def run_cli(tmp_path, command, cfg, *extra, name="cfg.json", out="out"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    code = main([command, "--config", str(path), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def test_pressure_zero(tmp_path):
    code, out = run_cli(tmp_path, "pressure", {"potential": {"kind": "zero", "q": 2}, "N": 5})
    assert code == EXIT_OK
    doc = json.loads((out / "pressure.json").read_text())
    assert doc["summary"]["P"] == pytest.approx(math.log(2), abs=1e-12)
    assert doc["passed"] is True
    assert (out / "pressure.csv").read_text().splitlines()[0] == "n,P_n,P_n_minus_P"


def test_lambda_scan_header_and_rows(tmp_path):
    cfg = dict(LUMP, K="solve", k_max=6, n_z=4, seed=3)
    code, out = run_cli(tmp_path, "lambda-scan", cfg)
    assert code == EXIT_OK
    lines = (out / "lambda-scan.csv").read_text().splitlines()
    assert lines[0] == "z,k,n_k,min_u,max_u,lambda,pass_nesting,pass_monotone,pass_recursion"
    assert len(lines) == 1 + 4 * 6
    assert all(line.endswith("true,true,true") for line in lines[1:])


def test_hofbauer_series(tmp_path):
    cfg = dict(HOF, truncate=12, measure="conformal", N=30, n_paths=3, path_length=200)
    code, out = run_cli(tmp_path, "hofbauer", cfg)
    assert code == EXIT_OK
    rows = [line.split(",") for line in (out / "hofbauer.csv").read_text().splitlines()[1:]]
    dev = [float(r[1]) for r in rows]
    assert all(b >= a for a, b in zip(dev, dev[1:]))
    doc = json.loads((out / "hofbauer.json").read_text())
    assert len(doc["summary"]["potential"]["table"]) == 2 ** 12


@pytest.mark.parametrize("cfg", [
    {"potential": {"kind": "zero"}, "bogus": 1},
    {"potential": {"kind": "zero"}, "tol": -1.0},
    {"potential": {"kind": "nope"}},
    {"potential": {"kind": "zero"}, "factor": {"q1": 3, "q2": 2, "table": [0, 0, 0]}},
    {"potential": {"kind": "zero"}, "measure": "other"},
    {"potential": {"kind": "zero"}, "experiment": "conformal"},
    {"N": 3},
])
def test_config_errors_exit_2(tmp_path, cfg):
    code, _ = run_cli(tmp_path, "pressure", cfg)
    assert code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["pressure", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["pressure", "--config", str(tmp_path / "bad.json")]) == EXIT_CONFIG


def test_experiment_needs_factor(tmp_path):
    code, _ = run_cli(tmp_path, "lambda-scan", {"potential": {"kind": "zero"}})
    assert code == EXIT_CONFIG


def test_non_convergence_exit_3(tmp_path):
    rng = np.random.default_rng(0)
    cfg = {"potential": {"kind": "locally_constant", "q": 3, "depth": 2, "table": rng.normal(size=9).tolist()},
           "max_iter": 1, "tol": 1e-15}
    code, _ = run_cli(tmp_path, "pressure", cfg)
    assert code == EXIT_CONVERGENCE


def test_violated_invariant_exit_1(tmp_path):
    cfg = dict(LUMP, K=1.0, N=6, n_paths=2)
    code, out = run_cli(tmp_path, "gibbs-check", cfg)
    assert code == EXIT_INVARIANT
    doc = json.loads((out / "gibbs-check.json").read_text())
    check = doc["checks"][0]
    assert not check["passed"] and check["value"] > check["bound"]


def test_oracle_flag(tmp_path):
    code, out = run_cli(tmp_path, "pushforward", dict(LUMP, depths=[4]), "--oracle")
    assert code == EXIT_OK
    names = [c["name"] for c in json.loads((out / "pushforward.json").read_text())["checks"]]
    assert "enumeration_oracle" in names and "lumped_closed_form" in names


def test_empty_report_files(tmp_path):
    rep = Report("empty", ["a", "b"])
    emit_csv(rep, tmp_path / "e.csv")
    emit_json(rep, tmp_path / "e.json")
    assert (tmp_path / "e.csv").read_bytes() == b"a,b\n"
    doc = json.loads((tmp_path / "e.json").read_text())
    assert doc["n_rows"] == 0 and doc["passed"] is True


def test_number_format():
    assert format_value(1 / 3) == "0.333333333333333"
    assert format_value(True) == "true"
    assert format_value(-math.inf) == "-inf"
    assert format_value([1, 2]) == "1 2"
    assert format_value(None) == ""


def test_json_keys_sorted_and_lf(tmp_path):
    code, out = run_cli(tmp_path, "weak-gibbs", dict(HOF, N=12))
    raw = (out / "weak-gibbs.json").read_bytes()
    assert b"\r\n" not in raw
    doc = json.loads(raw)
    assert list(doc) == sorted(doc)


@pytest.mark.parametrize("command,cfg", [
    ("lambda-scan", dict(LUMP, K="solve", k_max=5, n_z=6, seed=1)),
    ("mc-growth", dict(HOF, truncate=8, measure="conformal", K=1.2, seeds=[0, 1, 2], n_paths=50,
                       path_length=60, return_symbol=0)),
    ("image-gibbs", dict(LUMP, K="solve", depths=[3, 4], psi2_k=6, n_z=2)),
])
def test_deterministic_across_jobs(tmp_path, command, cfg):
    outputs = []
    for i, jobs in enumerate(("1", "1", "2")):
        _, out = run_cli(tmp_path, command, cfg, "--jobs", jobs, out=f"o{i}")
        outputs.append(sorted((p.name, p.read_bytes()) for p in out.iterdir()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_seed_override_changes_sample(tmp_path):
    cfg = dict(HOF, truncate=6, measure="conformal", K=1.2, seeds=[0], n_paths=40, path_length=40)
    _, a = run_cli(tmp_path, "mc-growth", cfg, "--seed", "5", out="a")
    _, b = run_cli(tmp_path, "mc-growth", cfg, "--seed", "6", out="b")
    assert (a / "mc-growth.csv").read_bytes() != (b / "mc-growth.csv").read_bytes()


def test_config_roundtrip():
    cfg = ExperimentConfig.from_dict(dict(LUMP, K="solve"))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(LUMP, K="big"))


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"potential": {"kind": "zero", "q": 3}, "N": 3}))
    proc = subprocess.run([sys.executable, "-m", "seqgibbs", "pressure", "--config", str(cfg),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS pressure.pressure_identity" in proc.stdout
