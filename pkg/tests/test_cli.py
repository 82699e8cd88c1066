import json
import math
import subprocess
import sys

import pytest

from wcstab.cli import main


@pytest.fixture
def cfg(tmp_path):
    def make(text, name="problem.ini"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return make


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


@pytest.mark.parametrize("h,code", [(-0.6, 0), (-0.4, 1)])
def test_analyze_exit_codes(cfg, capsys, h, code):
    got, out = run(["analyze", cfg(f"family = lasota\nh_const = {h}\np = 2\n")], capsys)
    assert got == code
    assert out.out.startswith("status: ")


def test_analyze_invalid_p(cfg, capsys):
    got, out = run(["analyze", cfg("family = lasota\nh_const = -0.5\np = 0.5\n")], capsys)
    assert got == 3 and "line 3" in out.err


def test_analyze_not_a_semigroup(cfg, capsys):
    got, _ = run(["analyze", cfg("family = lasota\nh_expr = -log(x)\n")], capsys)
    assert got == 4


def test_analyze_json(cfg, capsys):
    got, out = run(["analyze", cfg("family = lasota\nh_const = -0.6\np = 2\n"), "--json"], capsys)
    doc = json.loads(out.out)
    assert got == 0 and doc["status"] == "Stable" and doc["space"] == "Lp"


def test_analyze_sobolev(cfg, capsys):
    got, out = run(["analyze", cfg("family = lasota\nh_const = 0.4\np = 2\nspace = W1p_star\n"), "--json"], capsys)
    doc = json.loads(out.out)
    assert got == 0
    assert doc["verdicts"]["W1p_star"]["status"] == "Stable"
    assert doc["verdicts"]["W1p"]["status"] == "Unstable"


def test_simulate_values(cfg, capsys):
    got, out = run(["simulate", cfg("family = lasota\nh_const = -0.5\np = 2\n"), "--horizon", "4",
                    "--steps", "4"], capsys)
    lines = out.out.strip().splitlines()
    assert got == 0 and lines[0] == "t,norm" and len(lines) == 6
    for ln in lines[1:]:
        t, n = map(float, ln.split(","))
        assert n == pytest.approx(math.exp(-0.5 * t), rel=1e-8)


def test_simulate_single_step_and_errors(cfg, capsys):
    path = cfg("family = lasota\nh_const = -0.5\np = 2\n")
    got, out = run(["simulate", path, "--steps", "1"], capsys)
    assert got == 0 and len(out.out.strip().splitlines()) == 3
    got, _ = run(["simulate", path, "--steps", "0"], capsys)
    assert got == 3
    got, _ = run(["simulate", path, "-f", "x^(-0.6)"], capsys)
    assert got == 3


def test_csv_is_byte_deterministic(cfg, tmp_path, capsys):
    path = cfg("family = lasota\nh_const = -0.3\np = 2\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["analyze", path, "--csv", str(a)], capsys)
    run(["analyze", path, "--csv", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes() and a.read_bytes()


@pytest.mark.parametrize("suite", ["lasota_lp", "lasota_sobolev", "generalized", "hypercyclicity"])
def test_reproduce_suites_agree(capsys, suite):
    got, out = run(["reproduce", suite], capsys)
    assert got == 0
    ok, total = out.out.strip().splitlines()[-1].split()[0].split("/")
    assert ok == total and int(total) >= 3


def test_reproduce_unknown_suite(capsys):
    got, out = run(["reproduce", "nope"], capsys)
    assert got == 3 and "nope" in out.err


def test_admissibility_verb(cfg, capsys):
    got, out = run(["admissibility", cfg("family = lasota\nh_const = 0.2\np = 2\n"), "--json"], capsys)
    doc = json.loads(out.out)
    assert got == 0 and not doc["refuted"]
    assert doc["omega"] == pytest.approx(2 * 0.2 + 1, abs=0.05)


@pytest.mark.parametrize("h,code", [(-0.25, 0), (-0.75, 1)])
def test_hypercyclicity_verb(cfg, capsys, h, code):
    got, _ = run(["hypercyclicity", cfg(f"family = lasota\nh_const = {h}\np = 2\n")], capsys)
    assert got == code


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 3
    assert main([]) == 3
    capsys.readouterr()


def test_help_shows_tolerance_defaults():
    out = subprocess.run([sys.executable, "-m", "wcstab.cli", "analyze", "--help"],
                         capture_output=True, text=True, check=True).stdout
    assert "--slope-tol" in out and "default" in out
