from __future__ import annotations

import json
import subprocess
import sys

import pytest

from odesemigroup.cli import main, run
from odesemigroup.report import PLUMBING, Record, Report, records_from_csv


def ok(argv):
    code, rep = run(argv)
    assert code == 0, [r for r in rep.failures] if rep else code
    return rep


@pytest.fixture
def perturbed_legendre(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([{
        "name": "regular-legendre", "B": "-2*x/(1 - x^2)", "C": "l*(l + 1)/(1 - x^2) + x/100",
        "params": {"l": {"choices": [1, 2, 3], "default": 2}}, "window": [-0.9, 0.9],
    }]))
    return path


# add -------------------------------------------------------------------------

@pytest.mark.parametrize("names, summary", [
    (["regular-bessel", "spherical-bessel"], "Semi-spherical Bessel, alpha=3/2, beta=1"),
    (["modified-bessel", "spherical-bessel"], "Semi-spherical Euler, alpha=3/2, beta=0"),
    (["identity", "identity"], "identity"),
])
def test_add_examples(names, summary, capsys):
    rep = ok(["add", *names])
    assert rep.extras["summary"] == summary
    assert summary in capsys.readouterr().out


def test_add_sum_mode_and_naming():
    rep = ok(["add", "regular-bessel", "modified-bessel", "--mode", "sum", "--name", "twice-euler"])
    assert rep.extras["entry"]["name"] == "twice-euler"
    assert rep.extras["entry"]["B"] == "2/x"


def test_add_needs_two_names(capsys):
    assert run(["add", "regular-bessel"])[0] == 2
    assert "at least two" in capsys.readouterr().err


def test_add_disjoint_windows(tmp_path, capsys):
    path = tmp_path / "far.json"
    path.write_text(json.dumps([{"name": "far", "B": "0", "C": "1", "window": [20, 30]}]))
    assert main(["add", "regular-bessel", "far", "--registry", str(path)]) == 2
    assert "window" in capsys.readouterr().err


# derive ----------------------------------------------------------------------

def test_derive_general_bessel_minimal():
    rep = ok(["derive", "general-bessel", "--kinds", "minimal"])
    rec = next(r for r in rep.records if r.check == "lagrangian-minimal")
    assert rec.detail == "L = 1/2*(y'^2 - (beta - mu^2/x^2)*y^2)*x^alpha"


def test_derive_identity_null_max():
    rep = ok(["derive", "identity", "--kinds", "null_max"])
    assert rep.records[0].detail == "L = 0"


def test_derive_regular_bessel_nonstandard():
    rep = ok(["derive", "regular-bessel", "--kinds", "nonstandard"])
    rec = rep.records[0]
    assert "x^(-2)" in rec.detail and "@vbar" in rec.detail
    assert rec.passed and rec.tolerance == 1e-5


def test_derive_gauge_records():
    rep = ok(["derive", "general-bessel", "--kinds", "gauge"])
    assert [r.check for r in rep.records] == ["gauge-null_mid", "gauge-null_max"]


def test_derive_rejects_unknown_kind():
    assert run(["derive", "harmonic", "--kinds", "largest"])[0] == 2


# verify ----------------------------------------------------------------------

def test_verify_regular_bessel_reports_potential():
    rep = ok(["verify", "regular-bessel"])
    rec = next(r for r in rep.records if r.check == "canonical-r")
    assert rec.passed and "r = -(mu^2 - 1/4)/x^2" in rec.detail


def test_verify_detects_registry_override(perturbed_legendre):
    code, rep = run(["verify", "legendre", "--registry", str(perturbed_legendre), "-o", "/dev/null"])
    assert code == 1
    bad = [r for r in rep.failures if r.check == "registry-override"]
    assert bad and bad[0].subject == "regular-legendre" and bad[0].witness


def test_verify_unknown_name():
    assert main(["verify", "no-such-equation"]) == 2


def test_missing_registry_file(tmp_path):
    assert main(["verify", "harmonic", "--registry", str(tmp_path / "nope.json")]) == 2


def test_bad_subcommand():
    assert main(["frobnicate"]) == 2


def test_every_record_is_anchored():
    rep = ok(["verify", "spherical-bessel", "-o", "/dev/null"])
    assert all(r.anchor for r in rep.records)
    with pytest.raises(ValueError):
        Record("x", "y", "", "pass")


def test_same_seed_same_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ok(["verify", "regular-bessel", "harmonic", "--seed", "7", "-o", str(a)])
    ok(["verify", "regular-bessel", "harmonic", "--seed", "7", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_tolerance_flags_are_honoured():
    code, rep = run(["derive", "regular-bessel", "--kinds", "minimal", "--tol-el", "1e-30", "-o", "/dev/null"])
    assert code == 1
    assert rep.records[0].tolerance == 1e-30


# tables ----------------------------------------------------------------------

def test_tables_markdown_row(capsys):
    ok(["tables", "--format", "markdown"])
    out = capsys.readouterr().out
    assert "| Semi-spherical Bessel | Regular and spherical | alpha=3/2, beta=1 | pass |" in out
    assert "15/15 checks passed" in out


def test_tables_list_nine_rows_with_novel_stars():
    rep = ok(["tables"])
    rows = rep.tables[0].rows
    assert len(rows) == 9
    pairs = {(r[1], r[2]) for r in rows}
    assert pairs == {(a, b) for a in ("1", "3/2", "2") for b in ("1", "0", "-1")}
    assert any(r[0].startswith("*") for r in rows)
    assert len(rep.tables[1].rows) == 6


def test_csv_round_trip(capsys):
    rep = ok(["tables", "--format", "csv"])
    back = records_from_csv(capsys.readouterr().out)
    assert [r.to_json() for r in back] == [r.to_json() for r in rep.records]


def test_markdown_escapes_pipes():
    rep = Report("demo", {})
    rep.add(Record.flag("c", "s", PLUMBING, True, "a | b"))
    assert "a \\| b" in rep.to_markdown()


# canonicalize and bessel ------------------------------------------------------

def test_canonicalize_not_factorizable():
    rep = ok(["canonicalize", "--C", "exp(x)/x"])
    assert rep.extras["given"]["factorizable"] is False
    assert rep.extras["given"]["reason"] == "r outside catalog families"


def test_canonicalize_constant():
    rep = ok(["canonicalize", "--C", "5"])
    assert rep.extras["given"]["family"] == "constant"


def test_canonicalize_inverse_square_with_index():
    rep = ok(["canonicalize", "--C", "-(m^2 - 1/4)/x^2 + 1", "--param", "m=0:4:1", "--index", "m"])
    assert rep.extras["given"]["family"] == "inverse-square"
    assert rep.extras["given"]["k"] == "(-1/2 + m)/x"


def test_canonicalize_catalog_entry_eigen():
    rep = ok(["canonicalize", "spherical-bessel", "--eigen"])
    assert rep.extras["spherical-bessel"]["family"] == "inverse-square"
    assert rep.extras["spherical-bessel"]["lambda"] == 1.0


def test_canonicalize_bad_param():
    assert main(["canonicalize", "--C", "a", "--param", "a=1:2"]) == 2


def test_bessel_values():
    rep = ok(["bessel", "--mu", "0.5", "--x", "1", "2"])
    assert len(rep.records) == 2


def test_bessel_jacobi_anger():
    rep = ok(["bessel", "--jacobi-anger", "--x", "3", "--n-max", "8"])
    assert len(rep.records) == 9


def test_bessel_out_of_range():
    assert main(["bessel", "--x", "20"]) == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "odesemigroup.cli", "bessel", "--x", "1", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("check,subject,anchor,status")
