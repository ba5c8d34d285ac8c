from __future__ import annotations

import json

import numpy as np
import pytest

from fraccur.cli import EXIT_CONFIG, EXIT_OK, EXIT_PRECONDITION, main


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_json(argv, capsys):
    assert main(argv) == EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_usage_errors_exit_two(capsys):
    assert main([]) == EXIT_CONFIG
    assert main(["flatnorm", "--chain", "missing.json"]) == EXIT_CONFIG
    assert main(["perimeter", "--set", "nosuchset", "--alpha", "0.5"]) == EXIT_CONFIG


def test_low_exponent_push_is_a_precondition_failure(capsys):
    code = main(["push", "--map", "graph:weierstrass;a=0.45", "--gamma", "0.45"])
    assert code == EXIT_PRECONDITION
    assert "precondition" in capsys.readouterr().err


def test_selftest_passes(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out


def test_flatnorm_two_points(capsys):
    res = run_json(["flatnorm", "--chain", "points:4,12"], capsys)
    assert res["value"] == pytest.approx(0.5)


def test_corpus_contents_and_idempotence(in_tmp, capsys):
    assert main(["corpus", "--dir", "c1"]) == EXIT_OK
    assert main(["corpus", "--dir", "c2"]) == EXIT_OK
    index = json.loads((in_tmp / "c1" / "index.json").read_text())
    assert len(index) >= 20
    assert all(f"koch_{k}" in index for k in range(8))
    for name in index:
        a = (in_tmp / "c1" / f"{name}.json").read_bytes()
        assert a == (in_tmp / "c2" / f"{name}.json").read_bytes()


def test_manifest_and_replay(in_tmp, capsys):
    assert main(["perimeter", "--set", "disk", "--alpha", "0.5", "--level", "6", "--out", "per.json"]) == EXIT_OK
    man = json.loads((in_tmp / "per.json.manifest.json").read_text())
    assert "threads" not in man["parameters"]
    assert "--threads" not in man["argv"]
    capsys.readouterr()
    assert main(["replay", "per.json.manifest.json"]) == EXIT_OK
    assert "replay identical" in capsys.readouterr().out


def test_degree_csv(in_tmp, capsys):
    assert main(["degree", "--set", "disk", "--map", "zsquare", "--level", "5", "--out", "deg.csv"]) == EXIT_OK
    lines = (in_tmp / "deg.csv").read_text().splitlines()
    assert lines[0] == "y1,y2,degree,flag"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    y, deg, flag = rows[:, :2], rows[:, 2], rows[:, 3]
    inner = (np.linalg.norm(y, axis=1) < 0.9) & (flag == 0)
    assert inner.any() and np.all(deg[inner] == 2)
    assert (in_tmp / "deg.json").exists()


def test_young_and_zust_reports(capsys):
    res = run_json(["young", "--g0", "coord:i=0", "--g1", "coord:i=0", "--levels", "8"], capsys)
    assert res["value"] == pytest.approx(0.5, abs=2.0 ** -8)
    res = run_json(["zust", "--g0", "const:1", "--g1", "coord:i=0", "--g2", "coord:i=1", "--levels", "5"], capsys)
    assert res["value"] == pytest.approx(1.0)


def test_wedge_from_form_files(in_tmp, capsys):
    (in_tmp / "w.json").write_text(json.dumps({"d": 2, "m": 1, "terms": [{"coef": [1.0], "diffs": ["dx0"]}]}))
    (in_tmp / "e.json").write_text(json.dumps({"d": 2, "m": 1, "terms": [{"coef": [2.0], "diffs": ["dx1"]}]}))
    res = run_json(["wedge", "--omega", "w.json", "--eta", "e.json", "--n-max", "3"], capsys)
    assert res["value"] == pytest.approx(2.0)
