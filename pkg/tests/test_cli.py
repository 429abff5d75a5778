"""Command-line interface: exit codes, report layout and determinism."""

import json
import subprocess
import sys

import pytest

from curvlab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json", "--no-timing")
    return code, json.loads(out) if out else None, err


REPORT_KEYS = {"test", "value", "reference", "abs_err", "rel_err", "tol", "pass", "seconds"}


@pytest.fixture(autouse=True)
def no_order_env(monkeypatch):
    monkeypatch.delenv(cli.ORDER_ENV, raising=False)


# -- successful runs -------------------------------------------------------


def test_gauss_bonnet_sphere_passes(capsys):
    code, out, _ = run(capsys, "gauss-bonnet", "--spec", "sphere2")
    assert code == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("[PASS] calibration:sphere-R1221")
    assert lines[1].startswith("[PASS] gauss-bonnet:sphere2")


def test_json_layout_puts_calibration_first(capsys):
    code, data, _ = run_json(capsys, "identities", "--dim", "3", "--samples", "20")
    assert code == cli.EXIT_OK
    assert [d["test"] for d in data][0] == "calibration:sphere-R1221"
    for entry in data:
        assert REPORT_KEYS <= set(entry)
        assert entry["seconds"] is None
        assert entry["pass"] is True


def test_timing_present_without_flag(capsys):
    code, out, _ = run(capsys, "identities", "--dim", "2", "--samples", "5", "--json")
    assert code == cli.EXIT_OK
    assert all(isinstance(d["seconds"], float) for d in json.loads(out))


def test_report_file_is_byte_identical_across_runs(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["identities", "--dim", "4", "--samples", "30", "--seed", "7",
                         "--no-timing", "--report", str(p)]) == cli.EXIT_OK
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert json.loads(paths[0].read_text())[1]["test"].startswith("identity")


def test_report_file_matches_stdout_json(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "restriction-check", "--spec", "disc", "--order", "6",
                       "--json", "--no-timing", "--report", str(path))
    assert code == cli.EXIT_OK
    assert path.read_text() == out


@pytest.mark.parametrize("signature", ["lorentzian", "split", "-++"])
def test_identities_signatures(capsys, signature):
    code, data, _ = run_json(capsys, "identities", "--dim", "3", "--samples", "20", f"--signature={signature}")
    assert code == cli.EXIT_OK
    assert "signs=" in data[1]["test"]


def test_invariant_dims_flags_printed_formula(capsys):
    code, out, _ = run(capsys, "invariant-dims", "--max-dim", "4")
    assert code == cli.EXIT_OK
    assert "DISCREPANCY" in out
    assert "flagged, not adopted" in out


def test_invariant_dims_json_flag_key(capsys):
    code, data, _ = run_json(capsys, "invariant-dims", "--max-dim", "2")
    assert code == cli.EXIT_OK
    kernel = {d["test"]: d for d in data if d["test"].endswith(":kernel")}
    assert "flag" not in kernel["invariant-dims:m=1:kernel"]
    assert kernel["invariant-dims:m=2:kernel"]["flag"] == "DISCREPANCY"


def test_euler_lagrange_closed_and_boundary(capsys):
    code, data, _ = run_json(capsys, "euler-lagrange", "--spec", "sphere2", "--n", "2", "--order", "12")
    assert code == cli.EXIT_OK and data[1]["test"].startswith("euler-lagrange-interior")
    code, data, _ = run_json(capsys, "euler-lagrange", "--spec", "disc", "--n", "1", "--boundary", "--order", "12")
    assert code == cli.EXIT_OK and data[1]["test"].startswith("euler-lagrange-boundary")


# -- quadrature order precedence --------------------------------------------


def test_order_env_variable_is_used(capsys, monkeypatch):
    monkeypatch.setenv(cli.ORDER_ENV, "2")
    code, out, _ = run(capsys, "gauss-bonnet", "--spec", "sphere2")
    assert code == cli.EXIT_FAIL
    assert "[FAIL] gauss-bonnet:sphere2" in out


def test_order_flag_beats_env(capsys, monkeypatch):
    monkeypatch.setenv(cli.ORDER_ENV, "2")
    code, _, _ = run(capsys, "gauss-bonnet", "--spec", "sphere2", "--order", "16")
    assert code == cli.EXIT_OK


@pytest.mark.parametrize("value", ["abc", "0", "-3"])
def test_bad_order_env_is_input_error(capsys, monkeypatch, value):
    monkeypatch.setenv(cli.ORDER_ENV, value)
    code, _, err = run(capsys, "gauss-bonnet", "--spec", "sphere2")
    assert code == cli.EXIT_INPUT
    assert cli.ORDER_ENV in err


def test_resolve_order_precedence():
    spec = cli.load_spec("torus2")
    assert cli.resolve_order(5, spec) == 5
    assert cli.resolve_order(None, spec) == spec.quadrature_order
    assert cli.resolve_order(None) == cli.DEFAULT_ORDER


# -- failures and exit codes ------------------------------------------------


def test_tolerance_failure_exits_one(capsys):
    code, out, _ = run(capsys, "identities", "--dim", "5", "--samples", "20", "--as-printed")
    assert code == cli.EXIT_FAIL
    assert "[FAIL]" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["gauss-bonnet", "--spec", "no-such-manifold"],
        ["gauss-bonnet"],
        ["frobnicate"],
        ["identities", "--dim", "9"],
        ["identities", "--dim", "3", "--signature", "+-"],
        ["identities", "--dim", "3", "--as-printed"],
        ["euler-lagrange", "--spec", "sphere2", "--n", "2", "--boundary"],
        ["euler-lagrange", "--spec", "sphere2", "--n", "5"],
        ["euler-lagrange", "--spec", "sphere3", "--n", "1"],
        ["gauss-bonnet", "--spec", "sphere2", "--order", "0"],
    ],
)
def test_input_errors_exit_two(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == cli.EXIT_INPUT
    assert out == ""


def test_malformed_spec_file_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"name": "x", "dim": 2', encoding="utf-8")
    code, _, err = run(capsys, "gauss-bonnet", "--spec", str(path))
    assert code == cli.EXIT_INPUT
    assert "invalid JSON" in err


def test_expression_error_reports_offset(tmp_path, capsys):
    spec = json.loads(cli.load_spec("sphere2").dumps())
    spec["metric"][1]["expr"] = "sin(th)^^2"
    path = tmp_path / "typo.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    code, _, err = run(capsys, "gauss-bonnet", "--spec", str(path))
    assert code == cli.EXIT_INPUT
    assert "offset 8" in err


def test_wrong_signature_metric_exits_two(tmp_path, capsys):
    spec = json.loads(cli.load_spec("torus2").dumps())
    spec["metric"] = [{"i": 1, "j": 1, "expr": "-1"}, {"i": 2, "j": 2, "expr": "1"}]
    path = tmp_path / "lorentz.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    code, _, err = run(capsys, "gauss-bonnet", "--spec", str(path))
    assert code == cli.EXIT_INPUT
    assert "signature" in err


def test_unwritable_report_exits_two(tmp_path, capsys):
    target = tmp_path / "missing-dir" / "r.json"
    code, _, err = run(capsys, "identities", "--dim", "1", "--samples", "3", "--report", str(target))
    assert code == cli.EXIT_INPUT
    assert "cannot write report" in err


def test_unexpected_exception_exits_three(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("simulated fault")

    monkeypatch.setattr(cli, "identity_check", boom)
    code, _, err = run(capsys, "identities", "--dim", "2")
    assert code == cli.EXIT_INTERNAL
    assert "internal error" in err and "simulated fault" in err


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == cli.EXIT_OK
    assert "gauss-bonnet" in capsys.readouterr().out


# -- helpers -----------------------------------------------------------------


@pytest.mark.parametrize(
    "text, dim, expected",
    [
        (None, 3, (1, 1, 1)),
        ("riemannian", 2, (1, 1)),
        ("lorentzian", 4, (-1, 1, 1, 1)),
        ("split", 5, (-1, -1, 1, 1, 1)),
        ("+-+", 3, (1, -1, 1)),
    ],
)
def test_parse_signature(text, dim, expected):
    assert cli.parse_signature(text, dim) == expected


def test_calibration_report_passes():
    report = cli.calibration_report()
    assert report.passed
    assert abs(report.value - 1.0) < 1e-12


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "curvlab", "identities", "--dim", "1", "--samples", "3", "--json", "--no-timing"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)[0]["test"] == "calibration:sphere-R1221"
