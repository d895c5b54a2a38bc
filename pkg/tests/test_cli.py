import json
import subprocess
import sys

import pytest

from morseq.cli import main
from morseq.instance import builtin, to_dict


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def test_list(capsys):
    code, body = run_json(capsys, "list")
    assert code == 0
    assert [d["name"] for d in body["datasets"]] == ["torus", "klein", "interval", "genus2"]
    assert list(body)[:2] == ["version", "command"]


def test_torus_bold_homology(capsys):
    code, body = run_json(capsys, "complex", "torus", "--variant", "bold", "--homology")
    assert code == 0
    assert body["d_squared"] == "ok"
    assert body["homology"] == {"0": {"betti": 1, "torsion": []},
                                "1": {"betti": 2, "torsion": []},
                                "2": {"betti": 1, "torsion": []}}


def test_borel_klein(capsys):
    code, body = run_json(capsys, "borel", "klein", "--kmax", "4")
    assert code == 0
    assert body["borel"]["0"] == {"betti": 1, "torsion": []}
    assert body["borel"]["1"] == {"betti": 1, "torsion": [2, 2]}
    for k in "234":
        assert body["borel"][k] == {"betti": 0, "torsion": [2, 2]}


def test_glue_check(capsys):
    code, body = run_json(capsys, "glue-check", "klein")
    assert code == 0 and body["status"] == "ok" and body["matches_bold"]
    code, body = run_json(capsys, "glue-check", "genus2", "--pair", "a", "f")
    assert code == 0 and body["count"] == 0
    assert sum(c["gluable"] for c in body["chains"]) == 4


def test_text_output(capsys, monkeypatch):
    monkeypatch.setenv("MORSEQ_NO_COLOR", "1")
    code, out, _ = run(capsys, "complex", "klein", "--variant", "bold", "--homology")
    assert code == 0
    assert "1: Z + Z/2" in out
    assert "\033[" not in out


def _write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return str(p)


def test_exit_code_matrix(capsys, tmp_path):
    good = _write(tmp_path, "good.json", to_dict(builtin("torus")))
    broken = to_dict(builtin("torus"))
    del broken["trajectories"][0]["arrive"]
    invalid = _write(tmp_path, "invalid.json", broken)
    garbled = _write(tmp_path, "garbled.json", "{not json")
    cases = [
        (["list"], 0),
        (["validate", "torus"], 0),
        (["validate", good], 0),
        (["validate", invalid], 1),
        (["validate", garbled], 1),
        (["validate", "nonexistent.json"], 2),
        (["complex", "torus", "--variant", "hat-stab", "--homology"], 0),
        (["complex", "interval", "--variant", "bold"], 1),
        (["complex", invalid, "--variant", "bold"], 1),
        (["complex", "torus"], 2),
        (["complex", "torus", "--variant", "nope"], 2),
        (["borel", "torus", "--kmax", "3"], 0),
        (["borel", "interval"], 1),
        (["glue-check", "torus"], 0),
        (["glue-check", "torus", "--pair", "a+", "zz"], 1),
        (["flow-verify", "klein"], 2),
        (["frobnicate"], 2),
        ([], 2),
    ]
    for argv, expected in cases:
        code, _, _ = run(capsys, *argv)
        assert code == expected, argv


def test_validate_reports_problems(capsys, tmp_path):
    broken = to_dict(builtin("torus"))
    del broken["trajectories"][0]["arrive"]
    path = _write(tmp_path, "invalid.json", broken)
    code, body = run_json(capsys, "validate", path)
    assert code == 1 and body["valid"] is False
    assert body["problems"][0]["record"] == broken["trajectories"][0]["id"]


def test_deterministic_json(capsys):
    argv = ["complex", "klein", "--variant", "bold", "--homology", "--format", "json"]
    outs = set()
    for _ in range(3):
        main(argv)
        outs.add(capsys.readouterr().out)
    assert len(outs) == 1


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "morseq.cli", "list", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["datasets"][0]["name"] == "torus"


@pytest.mark.parametrize("argv", [["flow-verify", "torus", "--step", "5.0"]])
def test_flow_verify_bad_step_fails(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 1
