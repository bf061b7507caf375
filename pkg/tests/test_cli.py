import json
import subprocess
import sys

import pytest

from cusptherm.cli import OUT_ENV, main

TORUS = ["--family", "punctured_torus", "--markov", "3,3,3"]
CONJ_PAIR = ["--family", "punctured_torus", "--markov", "3.2,3", "--conjugate", "1.3,0.4,0.2,0.8307692307692308"]


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def test_pressure_at_one(tmp_path):
    code, out = run(["pressure", *TORUS, "--s", "1.0"], tmp_path)
    assert code == 0
    doc = json.loads((out / "pressure.json").read_text())
    assert abs(doc["result"]["value"]) <= 0.02
    assert doc["provenance"]["command"] == "pressure"
    assert doc["provenance"]["config"]["s"] == 1.0
    assert "version" in doc["provenance"]


def test_exit_codes(tmp_path, capsys):
    assert run(["pressure", *TORUS, "--s", "0.4"], tmp_path)[0] == 2
    assert "1/2" in capsys.readouterr().err
    assert run(["pressure"], tmp_path)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["pressure", "--config", str(bad)]) == 1
    assert main(["entropy-bs", *TORUS]) == 1
    assert main(["pressure", "--family", "genus-five"]) == 1
    assert main(["no-such-command"]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"representation": {"family": "s03"}, "s": 2.0}))
    code, out = run(["bowen", "--config", str(cfg), "--s", "1.5"], tmp_path)
    assert code == 0
    doc = json.loads((out / "bowen.json").read_text())
    assert doc["provenance"]["config"]["representation"] == {"family": "s03"}
    assert doc["result"]["root"] == pytest.approx(1.0, abs=0.02)


def test_output_is_deterministic(tmp_path):
    _, a = run(["pressure", *TORUS], tmp_path, "a")
    _, b = run(["pressure", *TORUS], tmp_path, "b")
    strip = lambda p: json.loads(p.read_text())["result"]
    assert strip(a / "pressure.json") == strip(b / "pressure.json")


def test_environment_output_dir(tmp_path, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv(OUT_ENV, str(target))
    assert main(["validate", *TORUS]) == 0
    assert json.loads((target / "validate.json").read_text())["result"]["valid"] is True


def test_single_metric_route(tmp_path):
    code, out = run(["metric", "--path", "markov", "--route", "manhattan"], tmp_path)
    assert code == 0
    res = json.loads((out / "metric.json").read_text())["result"]
    assert list(res["route_values"]) == ["manhattan(s=0.5)"]
    assert res["value"] > 0


def test_manhattan_on_conjugate_pair(tmp_path):
    code, out = run(["manhattan", *CONJ_PAIR, "--grid", "5"], tmp_path)
    assert code == 0
    verdict = json.loads((out / "manhattan_verdict.json").read_text())["result"]
    assert verdict["verdict"] == "CONJUGATE"
    lines = (out / "manhattan.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "s,chi,residual,tail_bound,L_max"
    assert len(lines) == 2 + 5


def test_spectrum_and_oracle(tmp_path):
    code, out = run(["spectrum", *TORUS, "--cutoff", "3", "--max-length", "4"], tmp_path)
    assert code == 0
    rows = (out / "spectrum.csv").read_text().splitlines()
    assert rows[1] == "word,length" and rows[2].startswith("1,1.92484730")
    code, out = run(["oracle", *TORUS, "--N", "10"], tmp_path, "oracle")
    assert code == 0
    doc = json.loads((out / "oracle.json").read_text())["result"]
    assert doc["all_agree"] and len(doc["table"]) == 3
    assert (out / "oracle_counts.csv").exists()


def test_oracle_too_shallow(tmp_path):
    assert run(["oracle", *TORUS, "--N", "6"], tmp_path)[0] == 3


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cusptherm.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
