import json

import numpy as np
import pytest

from finitegap.cli import fmt, main


def write_scene(tmp_path, doc, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--outdir", str(out)]), out


def test_fmt_is_stable():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(-0.0) == "0"
    assert fmt(3) == "3"
    assert fmt(float("nan")) == "nan"
    assert fmt(-np.inf) == "-inf"


def test_verify_zero_gap(tmp_path, capsys):
    rc, out = run(tmp_path, "verify")
    assert rc == 0
    report = json.loads((out / "verify.json").read_text())
    assert report["all_passed"] is True
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS ") for line in lines)


def test_missing_scene_file(tmp_path, capsys):
    rc, out = run(tmp_path, "comb", str(tmp_path / "nope.json"))
    assert rc == 2
    assert not out.exists()
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "usage"


def test_usage_errors(tmp_path):
    assert run(tmp_path, "frobnicate")[0] == 2
    assert run(tmp_path, "comb", "--grid", "many")[0] == 2
    assert run(tmp_path, "comb", "--out", "xml")[0] == 2


def test_lambda_star_rejected(tmp_path, capsys):
    path = write_scene(tmp_path, {"gaps": [[-0.5, -0.25]], "lambda_star": -0.5})
    rc, out = run(tmp_path, "mfun", path)
    assert rc == 3
    assert not out.exists()
    err = json.loads(capsys.readouterr().err)
    assert "lambda_star < -1" in err["message"]


@pytest.mark.parametrize("doc", [
    {"gaps": [[-0.5, -0.25]], "colour": "red"},
    {"gaps": [[-0.25, -0.5]]},
    {"gaps": [[-0.5, -0.25]], "divisor": [{"lambda": -0.6, "eps": 1}]},
    {"gaps": [], "grid": 1},
    [1, 2, 3],
])
def test_validation_errors(tmp_path, doc):
    rc, out = run(tmp_path, "comb", write_scene(tmp_path, doc))
    assert rc == 3
    assert not out.exists()


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(tmp_path, "comb", str(path))[0] == 3


@pytest.mark.parametrize("cmd,files", [
    ("comb", ["comb_trace.csv", "comb_teeth.csv"]),
    ("invert-comb", ["gaps.csv"]),
    ("mfun", ["mfun.csv"]),
    ("s2j", ["jacobi.csv", "r_grid.csv", "s2j.json"]),
    ("flow", ["flow.csv"]),
    ("cmv-schur", ["cmv_schur.csv"]),
])
def test_subcommands_write_artifacts(tmp_path, cmd, files):
    rc, out = run(tmp_path, cmd, "one_gap", "--grid", "20")
    assert rc == 0
    for f in files:
        assert (out / f).is_file()


def test_determinism(tmp_path):
    a = main(["mfun", "two_gap", "--grid", "30", "--outdir", str(tmp_path / "a")])
    b = main(["mfun", "two_gap", "--grid", "30", "--outdir", str(tmp_path / "b")])
    assert a == b == 0
    assert (tmp_path / "a" / "mfun.csv").read_bytes() == (tmp_path / "b" / "mfun.csv").read_bytes()


def test_json_tables(tmp_path):
    rc, out = run(tmp_path, "comb", "one_gap", "--grid", "10", "--out", "json")
    assert rc == 0
    doc = json.loads((out / "comb_teeth.json").read_text())
    assert doc["columns"][0] and len(doc["rows"]) == 1


def test_plots(tmp_path):
    rc, out = run(tmp_path, "flow", "one_gap", "--grid", "50", "--plots")
    assert rc == 0
    png = out / "flow.png"
    assert png.is_file() and png.read_bytes()[:4] == b"\x89PNG"


def test_s2j_report(tmp_path):
    rc, out = run(tmp_path, "s2j", "one_gap", "--grid", "20")
    assert rc == 0
    doc = json.loads((out / "s2j.json").read_text())
    assert doc["a0"] > 0
    assert len(doc["jacobi_divisor"]["points"]) == 1


def test_invert_comb_with_teeth(tmp_path):
    doc = {"gaps": [], "comb": {"omegas": [0.9], "heights": [0.2]}}
    rc, out = run(tmp_path, "invert-comb", write_scene(tmp_path, doc))
    assert rc == 0
    rows = (out / "gaps.csv").read_text().splitlines()
    assert len([r for r in rows if not r.startswith("#")]) == 2


def test_flow_table_columns(tmp_path):
    rc, out = run(tmp_path, "flow", "two_gap", "--grid", "25")
    assert rc == 0
    lines = [r for r in (out / "flow.csv").read_text().splitlines() if not r.startswith("#")]
    header = lines[0].split(",")
    assert header[0] == "ell" and header[-1] == "q"
    assert len(lines) == 26


def test_cmv_schur_sequences(tmp_path):
    doc = {"gaps": [], "verblunsky": {"plus": [[0.3, 0.1]] * 50, "minus": [0.2] * 50}}
    rc, out = run(tmp_path, "cmv-schur", write_scene(tmp_path, doc), "--grid", "16")
    assert rc == 0
    doc = {"gaps": [], "verblunsky": {"plus": [0.2]}}
    assert run(tmp_path, "cmv-schur", write_scene(tmp_path, doc, "b.json"))[0] == 3
