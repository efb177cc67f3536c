import io
import json
import shutil
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from baut import __version__
from baut.cli import EXIT_FIXTURE_FAIL, EXIT_INPUT, EXIT_OK, EXIT_TIMEOUT, main
from baut.fixtures import default_fixture_dir


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    from baut import cli

    if argv[0] == "fixtures":
        data = Path(argv[2]) if len(argv) > 2 else None
        code = cli.run_fixtures(data, out, err)
    else:
        args = cli.build_parser().parse_args(argv)
        cfg = cli.RunConfig(
            genus=args.genus,
            sign=args.sign,
            matrix_path=args.matrix,
            threads=args.threads,
            max_seconds=args.max_seconds,
            emit_json=args.emit_json,
            dump_groups=args.dump_groups,
            compute_orbits=args.orbits,
            confirm_long=args.confirm_long,
        )
        code = cli.run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


def test_genus_five_trivial():
    code, out, _ = call(["run", "--genus", "5", "--threads", "1"])
    assert code == EXIT_OK
    assert out.strip().endswith("bAut trivial: true")
    assert "Z/2 + Z/2 + Z/2 + Z/2 + Z/8" in out


def test_genus_six_requires_confirmation():
    code, _, err = call(["run", "--genus", "6", "--threads", "1"])
    assert code == EXIT_INPUT
    assert "--confirm-long" in err


def test_genus_six_with_confirmation(tmp_path):
    js = tmp_path / "r.json"
    code, out, err = call(["run", "--genus", "6", "--threads", "1", "--confirm-long", "--emit-json", str(js)])
    assert code == EXIT_OK
    assert "warning" in err
    assert out.strip().endswith("bAut trivial: false")
    rep = json.loads(js.read_text())
    assert rep["index"] == 2 and rep["surjective"] is False


def test_sign_minus_note():
    code, out, err = call(["run", "--genus", "2", "--sign", "minus", "--threads", "1"])
    assert code == EXIT_OK and "sign minus" in err
    assert out.strip().endswith("bAut trivial: true")


def test_outside_theorem_range_note():
    # outside the verified range the run still needs the long-run guard
    code, _, err = call(["run", "--genus", "9", "--threads", "1"])
    assert code == EXIT_INPUT


@pytest.mark.parametrize(
    "content, message",
    [
        ("[[1, 0], [0]]", "non-square matrix"),
        ("[[1, 0], [0, 1], [1, 1]]", "non-square matrix"),
        ("not json", "malformed matrix file"),
        ('[["a"]]', "malformed matrix file"),
        ("[[0, 1], [-1, 0]]", "degenerate form"),
        ("[[1, 3], [0, 1]]", "indefinite form"),
    ],
)
def test_bad_matrix_input(tmp_path, content, message):
    p = tmp_path / "q.json"
    p.write_text(content)
    code, _, err = call(["run", "--matrix", str(p), "--threads", "1"])
    assert code == EXIT_INPUT
    assert message in err


def test_missing_matrix_file(tmp_path):
    code, _, err = call(["run", "--matrix", str(tmp_path / "nope.json")])
    assert code == EXIT_INPUT and "malformed matrix file" in err


def test_custom_matrix(tmp_path):
    p = tmp_path / "q.json"
    p.write_text("[[1, 1], [0, 1]]")
    code, out, _ = call(["run", "--matrix", str(p), "--threads", "1", "--orbits"])
    assert code == EXIT_OK
    assert "|bAut|" in out


def test_timeout_exit_code():
    code, out, err = call(["run", "--genus", "7", "--threads", "1", "--max-seconds", "0.05"])
    assert code == EXIT_TIMEOUT
    assert "timeout" in err and out == ""


def test_nonpositive_budget_rejected():
    code, _, _ = call(["run", "--genus", "2", "--max-seconds", "0"])
    assert code == EXIT_INPUT


def test_json_and_group_dump(tmp_path):
    js = tmp_path / "out.json"
    code, _, _ = call(["run", "--genus", "3", "--threads", "1", "--emit-json", str(js), "--dump-groups"])
    assert code == EXIT_OK
    rep = json.loads(js.read_text())
    assert rep["aut_v_count"] == 48 and rep["bdry_aut_count"] == 48 and rep["baut_trivial"] is True
    groups = json.loads((tmp_path / "out.groups.json").read_text())
    assert len(groups["isometries"]) == 48
    assert len(groups["image"]) == 48 and len(groups["boundary_automorphisms"]) == 48
    assert groups["orders"] == rep["orders"]


def test_group_dump_default_path(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = call(["run", "--genus", "2", "--threads", "1", "--dump-groups"])
    assert code == EXIT_OK
    assert (tmp_path / "baut_groups_2.json").exists()


def test_fixtures_report_failures_honestly():
    code, out, _ = call(["fixtures"])
    assert code == EXIT_FIXTURE_FAIL
    # the only disagreement with the published data is the genus-4 group order
    fails = [line for line in out.splitlines() if "FAIL" in line]
    assert fails == ["h=4: FAIL", "  FAIL aut_count: computed 1152, published 1024"]
    assert "h=2: pass" in out and "h=5: pass" in out


def test_perturbed_fixture_fails_isometry(tmp_path):
    data = tmp_path / "fx"
    shutil.copytree(default_fixture_dir(), data)
    raw = json.loads((data / "h3.json").read_text())
    raw["linking_matrix"][0][0] = str(Fraction(raw["linking_matrix"][0][0]) + Fraction(1, 2))
    (data / "h3.json").write_text(json.dumps(raw))
    code, out, _ = call(["fixtures", "--data-dir", str(data)])
    assert code == EXIT_FIXTURE_FAIL
    block = out.split("h=3:")[1].split("h=4:")[0]
    assert "FAIL isometry: isometry not found" in block


def test_missing_fixture(tmp_path):
    data = tmp_path / "fx"
    shutil.copytree(default_fixture_dir(), data)
    (data / "h5.json").unlink()
    code, _, err = call(["fixtures", "--data-dir", str(data)])
    assert code == EXIT_INPUT and "missing" in err


def test_main_entry_point(capsys):
    assert main(["run", "--genus", "1", "--threads", "1"]) == EXIT_OK
    assert "bAut trivial: true" in capsys.readouterr().out


def test_console_script_version():
    exe = shutil.which("baut")
    cmd = [exe] if exe else [sys.executable, "-m", "baut.cli"]
    res = subprocess.run(cmd + ["--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
