import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ibpfourier.cli import main
from ibpfourier.normality import decay_fit

COULOMB2 = json.dumps({"family": "shifted_coulomb", "center": [0.3, -0.2], "exclusion_radius": 0.5})
BUMP2 = json.dumps({"family": "bump", "dim": 2})


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_certify(capsys):
    code, out, _ = run(["certify", "--kernel", COULOMB2, "--level", "2"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["kind"] == "normal"
    assert d["val"] == 2


def test_transform1d_with_trace(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    code, out, _ = run(["transform1d", "--kernel", COULOMB2, "--fixed", "y=1.5", "--k", "1.0",
                        "--trace", str(trace)], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["converged"]
    with open(trace) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["radius", "value_re", "value_im", "bound"]
    assert len(rows) == len(d["trace"]) + 1


def test_transform1d_zero_k(capsys):
    code, _, err = run(["transform1d", "--kernel", COULOMB2, "--fixed", "y=1.5", "--k", "0"], capsys)
    assert code == 1
    assert "k = 0" in err


def test_transform1d_inside_w(capsys):
    code, _, err = run(["transform1d", "--kernel", COULOMB2, "--fixed", "y=-0.1", "--k", "1"], capsys)
    assert code == 1
    assert "error" in err


def test_transform_2d_report_and_traces(tmp_path, capsys):
    rep = tmp_path / "rep.json"
    tdir = tmp_path / "traces"
    code, out, _ = run(["transform", "--dim", "2", "--kernel", BUMP2, "--k", "1,1", "--report", str(rep),
                        "--trace-dir", str(tdir), "--no-monitor"], capsys)
    assert code == 0
    d = json.loads(rep.read_text())
    assert d == json.loads(out)
    assert d["pass"]
    xy, yx = (complex(*d["values"][o]) for o in ("xy", "yx"))
    assert abs(xy - yx) <= 1e-4 * abs(xy)
    assert sorted(p.name for p in tdir.iterdir()) == ["xy.csv", "yx.csv"]


def test_transform_dimension_mismatch(capsys):
    code, _, err = run(["transform", "--dim", "3", "--kernel", BUMP2, "--k", "1,1"], capsys)
    assert code == 1


def test_oracle(capsys):
    code, out, _ = run(["oracle", "--kernel", BUMP2, "--k", "1,1", "--boxes", "16,32,64"], capsys)
    assert code == 0
    d = json.loads(out)
    np.testing.assert_allclose(d["value"][0], 4.0829, atol=1e-3)
    assert d["estimated_accuracy"] > 0


def test_oracle_non_monotone_boxes(capsys):
    code, _, err = run(["oracle", "--kernel", BUMP2, "--k", "1,1", "--boxes", "32,16,64"], capsys)
    assert code == 1
    assert "non-monotone" in err


def test_verify_out_file_is_deterministic(tmp_path, capsys):
    # the config snapshot records --out, so both runs write the same path
    a = tmp_path / "a.json"
    assert run(["--seed", "7", "--out", str(a), "verify", "--suite", "modulus"], capsys)[0] == 0
    first = a.read_bytes()
    assert run(["--seed", "7", "--out", str(a), "verify", "--suite", "modulus"], capsys)[0] == 0
    assert a.read_bytes() == first
    d = json.loads(a.read_text())
    assert d["status"] == "pass"
    assert d["config"]["seed"] == 7


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "tol": 1e-9}))
    code, out, _ = run(["--config", str(cfg), "verify", "--suite", "modulus"], capsys)
    assert code == 0
    assert json.loads(out)["config"]["seed"] == 11
    cfg.write_text(json.dumps({"colour": "blue"}))
    code, _, err = run(["--config", str(cfg), "verify", "--suite", "modulus"], capsys)
    assert code == 1
    assert "unknown config keys" in err


def test_plotdata_from_transform_and_decay(tmp_path, capsys):
    res = tmp_path / "r.json"
    run(["--out", str(res), "transform1d", "--kernel", COULOMB2, "--fixed", "y=2", "--k", "1"], capsys)
    out = tmp_path / "r.csv"
    assert run(["--out", str(out), "plotdata", "--input", str(res)], capsys)[0] == 0
    assert out.read_text().startswith("radius,value_re,value_im,bound")
    cert = decay_fit([(r, 1 / r) for r in (8, 12, 16, 24, 32, 48, 64)], 1)
    cj = tmp_path / "c.json"
    cj.write_text(json.dumps(cert.to_dict()))
    out2 = tmp_path / "c.csv"
    assert run(["--out", str(out2), "plotdata", "--input", str(cj)], capsys)[0] == 0
    with open(out2) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 8


def test_plotdata_needs_out(tmp_path, capsys):
    cj = tmp_path / "c.json"
    cj.write_text(json.dumps({"trace": []}))
    code, _, err = run(["plotdata", "--input", str(cj)], capsys)
    assert code == 1


def test_usage_errors_exit_one(capsys):
    assert run(["verify", "--suite", "nope"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    assert run(["--help"], capsys)[0] == 0


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "ibpfourier.cli", "verify", "--suite", "modulus"],
                       capture_output=True, text=True, timeout=300)
    assert p.returncode == 0
    assert json.loads(p.stdout)["suite"] == "modulus"
