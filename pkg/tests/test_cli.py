import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from twistorsion.algebra import gaussian
from twistorsion.cli import InputError, c_from_C, main, parse_n_list, parse_scalar, parse_slopes
from twistorsion.variety import Slope


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


# -- parsing ------------------------------------------------------------------


def test_parse_n_list():
    assert parse_n_list("-3..4") == [-3, -2, -1, 1, 2, 3, 4]
    assert parse_n_list("2") == [2]
    assert parse_n_list("-1,2..3,2") == [-1, 2, 3]
    for bad in ("0", "x", "4..1", ""):
        with pytest.raises(InputError):
            parse_n_list(bad)


def test_parse_slopes():
    assert parse_slopes("1/0,-5/3") == [Slope(1, 0), Slope(-5, 3)]
    for bad in ("2/4", "3/0", "1", ""):
        with pytest.raises(InputError):
            parse_slopes(bad)


def test_parse_scalar():
    assert parse_scalar("7/3") == Fraction(7, 3)
    assert parse_scalar("1.25") == Fraction(5, 4)
    assert parse_scalar("1/2+3/2i") == gaussian(Fraction(1, 2), Fraction(3, 2))
    assert parse_scalar("2-i") == gaussian(2, -1)
    assert parse_scalar("-i") == gaussian(0, -1)
    assert parse_scalar("1e-3+2j") == 1e-3 + 2j
    with pytest.raises(InputError):
        parse_scalar("abc")


def test_c_from_C():
    assert c_from_C(Fraction(5, 2)) == 2
    assert c_from_C(Fraction(-10, 3)) == -3
    c = c_from_C(Fraction(1, 3))
    assert isinstance(c, complex) and abs(c + 1 / c - 1 / 3) < 1e-14 and c.imag > 0
    c = c_from_C(3 + 1j)
    assert abs(c) >= 1 and abs(c + 1 / c - (3 + 1j)) < 1e-14


# -- vanish --------------------------------------------------------------------------


def test_vanish_figure_eight(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "-1", "--slope", "1/0", "--trials", "5", "--seed", "7")
    assert code == 0
    assert set(data) == {"config", "results", "summary"}
    assert len(data["results"]) == 5
    for r in data["results"]:
        assert r["verdict"] == "vanishes"
        assert max(r["relative_bivariate"], r["relative_univariate"]) < 1e-8
        assert set(r["c"]) == {"re", "im"}


def test_vanish_trefoil(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "1", "--slope", "1/0", "--trials", "5")
    assert code == 0
    for r in data["results"]:
        assert r["verdict"] == "nonvanishing"
        assert abs(r["sum_bivariate"]["re"] + 2) < 1e-10 and abs(r["sum_bivariate"]["im"]) < 1e-10


def test_vanish_twist_three_two(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "2", "--slope", "3/2", "--trials", "3")
    assert code == 0 and data["summary"]["ok"] == 3


def test_vanish_fixed_c_records_exact(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "-2", "--slope", "-5/3", "--c", "7/3")
    assert code == 0
    assert data["config"]["c"] == "7/3" and data["config"]["c_source"] == "c"
    assert len(data["results"]) == 1


def test_vanish_C_choice(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "3", "--slope", "1/1", "--C", "5/2")
    assert code == 0
    assert data["config"]["c"] == "2" and data["config"]["C"] == "5/2"


def test_route_violation_exit_code(capsys):
    code, data, err = run_json(capsys, "vanish", "--n", "3", "--slope", "3/2", "--trials", "1", "--tol", "1e-30")
    assert code == 1
    assert "verdict error" in err


def test_exhaustion_exit_code(capsys, monkeypatch):
    import twistorsion.residue as residue

    def never_generic(*args, **kwargs):
        raise residue.GenericityError("forced")

    monkeypatch.setattr(residue, "evaluate_sum", never_generic)
    code, data, err = run_json(capsys, "vanish", "--n", "2", "--slope", "1/1", "--trials", "1",
                               "--resample-budget", "2")
    assert code == 2
    r = data["results"][0]
    assert r["verdict"] == "inconclusive" and r["genericity_retries"] == 2 and "forced" in r["failures"]


def test_rejected_c_is_invalid_input(capsys):
    code, out, err = run(capsys, "vanish", "--n", "2", "--slope", "1/1", "--c", "-1/1")
    assert code == 3 and out == "" and "invalid input" in err


def test_determinism(capsys):
    argv = ["vanish", "--n", "-2..2", "--slope", "1/1,2/1", "--trials", "2", "--seed", "11"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    _, c, _ = run(capsys, *argv, "--jobs", "2")
    assert a == b == c


def test_seed_changes_samples(capsys):
    _, a, _ = run_json(capsys, "vanish", "--n", "2", "--trials", "1", "--seed", "1")
    _, b, _ = run_json(capsys, "vanish", "--n", "2", "--trials", "1", "--seed", "2")
    assert a["results"][0]["c"] != b["results"][0]["c"]


def test_env_overrides(capsys, monkeypatch):
    monkeypatch.setenv("TWISTORSION_TOL", "1e-6")
    monkeypatch.setenv("TWISTORSION_RESAMPLE_BUDGET", "3")
    _, data, _ = run_json(capsys, "vanish", "--n", "2", "--trials", "1")
    assert data["config"]["tol"] == 1e-6 and data["config"]["resample_budget"] == 3
    _, data, _ = run_json(capsys, "vanish", "--n", "2", "--trials", "1", "--resample-budget", "5")
    assert data["config"]["resample_budget"] == 5
    monkeypatch.setenv("TWISTORSION_TOL", "loose")
    code, _, _ = run(capsys, "vanish", "--n", "2")
    assert code == 3


def test_float_mode(capsys):
    code, data, _ = run_json(capsys, "vanish", "--n", "2", "--slope", "1/1", "--trials", "2", "--mode", "float")
    assert code == 0 and data["config"]["mode"] == "float"


@pytest.mark.parametrize("argv", [
    ["vanish", "--n", "0"],
    ["vanish", "--slope", "2/4"],
    ["vanish", "--slope", "2/0"],
    ["vanish", "--c", "1"],
    ["vanish", "--c", "2", "--C", "3"],
    ["vanish", "--trials", "0"],
    ["vanish", "--bogus"],
    ["certify"],
    ["nothing"],
])
def test_invalid_input(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 3


def test_csv_and_table(capsys):
    code, out, _ = run(capsys, "vanish", "--n", "-1", "--trials", "2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 2 and "sum_bivariate_re" in rows[0]
    code, out, _ = run(capsys, "vanish", "--n", "-1", "--trials", "2", "--format", "table")
    assert code == 0 and "summary:" in out and "vanishes" in out


# -- torsion -----------------------------------------------------------------------------


def test_torsion_trefoil(capsys):
    code, data, _ = run_json(capsys, "torsion", "--n", "1", "--slope", "1/0", "--c", "1.3+0.2i")
    assert code == 0 and len(data["results"]) == 1
    r = data["results"][0]
    for route in ("jacobian", "closed_lambda", "change_of_curve", "three_variable"):
        assert abs(r[route]["re"] + 0.5) < 1e-12 and abs(r[route]["im"]) < 1e-12


def test_torsion_figure_eight_longitude(capsys):
    code, data, _ = run_json(capsys, "torsion", "--n", "-1", "--slope", "0/1", "--trials", "2")
    assert code == 0
    for r in data["results"]:
        assert r["route_spread"] < 1e-8 and r["inversion_gap"] < 1e-9


def test_torsion_row_count_matches_fiber(capsys):
    from twistorsion.residue import fiber_solve
    from twistorsion.variety import TwistKnot
    code, data, _ = run_json(capsys, "torsion", "--n", "2", "--slope", "3/2", "--c", "2/3+1/2i")
    fiber = fiber_solve(TwistKnot(2), Slope(3, 2), gaussian(Fraction(2, 3), Fraction(1, 2)))
    assert code == 0 and len(data["results"]) == len(fiber)
    assert all(r["closed_lambda"] is None for r in data["results"])


# -- certify -------------------------------------------------------------------------------


def test_certify_chebyshev(capsys):
    code, data, _ = run_json(capsys, "certify", "--suite", "chebyshev", "--kmax", "50")
    assert code == 0 and data["results"][0]["n_checks"] == 5 * 101


def test_certify_zeqn(capsys):
    code, data, _ = run_json(capsys, "certify", "--suite", "zeqn", "--n", "-3..4")
    assert code == 0 and len(data["results"]) == 7


def test_certify_degrees_trefoil(capsys):
    code, data, err = run_json(capsys, "certify", "--suite", "degrees", "--n", "1", "--slope", "1/0")
    assert code == 0
    assert data["results"][0]["expected_failure"] is True
    assert "as predicted" in err


@pytest.mark.parametrize("suite", ["simp", "unit", "halt", "ddivides", "det", "degrees"])
def test_certify_suites(capsys, suite):
    code, data, _ = run_json(capsys, "certify", "--suite", suite, "--n", "-1,2", "--slope", "1/0,2/1,3/2")
    assert code == 0 and data["summary"]["passed"] == len(data["results"])


def test_certify_sampled_suites(capsys):
    code, data, _ = run_json(capsys, "certify", "--suite", "detzero", "--suite", "jacobi",
                             "--n", "2", "--trials", "20")
    assert code == 0 and len(data["results"]) == 2


def test_certify_gaussian_c(capsys):
    code, _, _ = run(capsys, "certify", "--suite", "halt", "--n", "2", "--slope", "1/1", "--c", "1+1i")
    assert code == 0
    code, _, _ = run(capsys, "certify", "--suite", "halt", "--n", "2", "--slope", "1/1", "--c", "1e-1+1e-300j")
    assert code == 3


# -- variety ---------------------------------------------------------------------------------


def _entries(data, n):
    return {r["name"]: r["value"] for r in data["results"] if r["n"] == n}


def test_variety(capsys):
    code, data, _ = run_json(capsys, "variety", "--n", "1,-1,2", "--slope", "3/2")
    assert code == 0
    assert _entries(data, 1)["F"] == "(1)*m^2 + (-z + 1) + (1)*m^-2"
    e = _entries(data, -1)
    assert e["f1"] == "-z + 1" and e["f2"] == "z^2 - z + 1"
    assert _entries(data, 2)["deg f2"] == 3
    assert "E[3/2]" in e and "Riley" in e


def test_variety_table(capsys):
    code, out, _ = run(capsys, "variety", "--n", "1", "--format", "table")
    assert code == 0 and "Riley = (-1)*u + (x - 1)" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "twistorsion", "variety", "--n", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["summary"]["knots"] == 1
