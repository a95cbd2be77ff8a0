import hashlib
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from gnls.cli import main

from conftest import DATA


def _run(tmp_path, *argv, out="out"):
    return main([*argv, "--out", str(tmp_path / out)])


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_check_gp(tmp_path, capsys):
    assert _run(tmp_path, "check", "--nl", str(DATA / "gp.json")) == 0
    out = capsys.readouterr().out
    assert "c_s=1.4142135623730951" in out and "k=-6.0" in out and "Gamma=6.0" in out
    rep = json.loads((tmp_path / "out" / "check.json").read_text())
    assert rep["h1_holds"] and rep["h2_holds"] and rep["h3_holds"]


def test_check_k0_fails(tmp_path):
    assert _run(tmp_path, "check", "--nl", str(DATA / "k0.json"), "--quiet") == 1


def test_check_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"coeffs": [1,')
    assert _run(tmp_path, "check", "--nl", str(bad)) == 2
    assert "cannot read" in capsys.readouterr().err
    assert _run(tmp_path, "check", "--nl", str(tmp_path / "missing.json")) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_diagram_deterministic(tmp_path):
    args = ("diagram", "--nl", "gp", "--c-steps", "40", "--q-steps", "101", "--quiet")
    assert _run(tmp_path, *args, out="a") == 0
    assert _run(tmp_path, *args, out="b") == 0
    for name in ("branch.csv", "diagram.csv", "qstar.json", "diagram.svg", "manifest.json"):
        assert _sha(tmp_path / "a" / name) == _sha(tmp_path / "b" / name), name


def test_manifest_hashes(tmp_path):
    assert _run(tmp_path, "diagram", "--nl", "gp", "--c-steps", "30", "--q-steps", "81", "--quiet") == 0
    out = tmp_path / "out"
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "diagram"
    assert man["nl"]["coeffs"] == [1.0]
    assert man["parameters"]["q_steps"] == 81
    names = {o["path"]: o["sha256"] for o in man["outputs"]}
    assert set(names) == {"branch.csv", "diagram.csv", "qstar.json", "diagram.svg"}
    for name, digest in names.items():
        assert _sha(out / name) == digest


def test_svg_parses(tmp_path):
    assert _run(tmp_path, "diagram", "--nl", "fig4", "--c-steps", "60", "--q-steps", "101", "--quiet") == 0
    root = ET.parse(tmp_path / "out" / "diagram.svg").getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) >= 2


def test_no_svg_flag(tmp_path):
    assert _run(tmp_path, "diagram", "--c-steps", "20", "--q-steps", "41", "--no-svg", "--quiet") == 0
    assert not (tmp_path / "out" / "diagram.svg").exists()


def test_json_output(tmp_path, capsys):
    assert _run(tmp_path, "kdv", "--nl", "gp", "--json", "--assert") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["momentum_ok"] and rep["slope_ok"]


def test_quiet(tmp_path, capsys):
    assert _run(tmp_path, "branch", "--c-steps", "10", "--quiet") == 0
    assert capsys.readouterr().out == ""
    assert (tmp_path / "out" / "branch.csv").read_text().startswith("c,xi_c,E,p")


def test_profile_and_audit(tmp_path):
    assert _run(tmp_path, "profile", "--c", "0.5", "--quiet") == 0
    assert (tmp_path / "out" / "profile.csv").exists()
    assert _run(tmp_path, "audit", "--c-steps", "5", "--assert", "--quiet", out="audit") == 0
    rows = json.loads((tmp_path / "audit" / "audit.json").read_text())
    assert len(rows) == 5 and all(r["ok"] for r in rows)


def test_profile_bad_speed(tmp_path, capsys):
    assert _run(tmp_path, "profile", "--c", "2.0") == 1
    assert "NotFound" in capsys.readouterr().err


def test_qstar_assert(tmp_path, capsys):
    assert _run(tmp_path, "qstar", "--c-steps", "60", "--json", "--assert") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["method"] == "monotone-limit"


def test_evolve_short(tmp_path, capsys):
    argv = ("evolve", "--T", "0.5", "--N", "512", "--L", "48", "--every", "0.25", "--json", "--checkpoint")
    assert _run(tmp_path, *argv) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["E_drift"] < 1e-8
    lines = (tmp_path / "out" / "ledger.csv").read_text().splitlines()
    assert lines[0] == "t,E,p,p_untwisted,min_mod,center" and len(lines) == 4
    ck = json.loads((tmp_path / "out" / "checkpoint.json").read_text())
    assert len(ck["re"]) == 512


def test_evolve_assert_fails_on_tight_tolerance(tmp_path):
    argv = ("evolve", "--T", "0.5", "--N", "512", "--L", "48", "--e-tol", "0", "--quiet", "--assert")
    assert _run(tmp_path, *argv) == 1


def test_stability_small(tmp_path, capsys):
    assert _run(tmp_path, "stability", "--n", "1", "--T", "1", "--json") == 0
    rep = json.loads(capsys.readouterr().out)
    assert len(rep["members"]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "gnls", "check", "--nl", "gp", "--quiet", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
