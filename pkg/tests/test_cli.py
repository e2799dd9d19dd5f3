import json
from dataclasses import replace

import pytest

from app import main
from components.report_writer import RECORD_COLUMNS
from core.morse_core import DeRhamData
from data.file_io import FileIO, dumps_json
from data.morse_schema import serialize_morse_data
from geometry.forms import family_s
from geometry.sphere_lab import analytic_morse_data


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    for var in ("CONEMORSE_THREADS", "CONEMORSE_LOG_LEVEL", "CONEMORSE_DATA_DIR"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _weak_rhs(report):
    return [rec["rhs"] for rec in report["weak_bounds"]]


def test_morse_report_on_bundled_dataset(capsys):
    code, out = _run(capsys, "morse-report", "s2_quadratic")
    assert code == 0
    report = json.loads(out)["report"]
    assert report["b_psi"] == [1, 0, 0, 1]
    assert _weak_rhs(report) == [2, 3, 3, 2]
    assert report["q_certificate"]["coefficients"] == [1, 2, 1]
    assert report["passed"]
    assert {rec["source"] for rec in report["weak_bounds"]} == {"cone-morse/weak"}
    assert {rec["source"] for rec in report["strong_bounds"]} == {"cone-morse/strong"}


def test_morse_report_as_csv(capsys):
    code, out = _run(capsys, "morse-report", "t2_perfect_dtheta", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ",".join(RECORD_COLUMNS)
    assert all(line.startswith("t2_perfect_dtheta,") for line in lines[1:])


def test_invalid_json_input(capsys, isolated):
    (isolated / "broken.json").write_text("{", encoding="utf-8")
    code, out = _run(capsys, "morse-report", "broken.json")
    assert code == 2
    assert out == ""


def contradictory_sphere_data():
    """c(psi) has rank one while the de Rham data claims psi is exact."""
    return replace(analytic_morse_data(family_s(0.3)), de_rham=DeRhamData((1, 0, 1), (0, 0, 0)))


def test_boundary_that_does_not_square_to_zero(capsys, isolated):
    doc = serialize_morse_data(analytic_morse_data(family_s(0.3)))
    doc["flow_counts"][0]["n"] = -doc["flow_counts"][0]["n"]
    (isolated / "bad_boundary.json").write_text(dumps_json(doc), encoding="utf-8")
    code, out = _run(capsys, "morse-report", "bad_boundary.json")
    assert code == 2
    assert out == ""


def test_violated_inequality_exits_three_with_report(capsys, isolated):
    FileIO(str(isolated)).write_json(serialize_morse_data(contradictory_sphere_data()), "wrong.json")
    code, out = _run(capsys, "morse-report", "wrong.json")
    assert code == 3
    report = json.loads(out)["report"]
    assert not report["passed"]
    failed = {rec["source"] for rec in report["checks"] if not rec["holds"]}
    assert "cone-morse/quasi-isomorphism" in failed


def test_open_form_without_de_rham_data_is_invalid(capsys, isolated):
    data = replace(analytic_morse_data(family_s(0.3)), psi_closed=False, de_rham=None)
    FileIO(str(isolated)).write_json(serialize_morse_data(data), "open.json")
    code, out = _run(capsys, "morse-report", "open.json")
    assert code == 2
    assert out == ""


@pytest.mark.parametrize("family, param, v, b_psi, weak", [
    ("s", "0.3", [1, 0, 0, 0], [1, 0, 0, 1], [2, 3, 3, 2]),
    ("s", "0", [0, 0, 0, 0], [1, 1, 1, 1], [2, 4, 4, 2]),
    ("t", "0.2", [2, 0, 0, 0], [1, 0, 0, 1], [2, 2, 2, 2]),
])
def test_s2_example_analytic(capsys, family, param, v, b_psi, weak):
    code, out = _run(capsys, "s2-example", "--family", family, "--param", param)
    assert code == 0
    report = json.loads(out)["reports"]["analytic"]
    assert report["v"] == v
    assert report["b_psi"] == b_psi
    assert _weak_rhs(report) == weak


PARAM_GRID = ["-0.4", "-0.3", "-0.2", "-0.1", "-0.05", "0", "0.05", "0.1", "0.2", "0.3", "0.4"]


@pytest.mark.parametrize("param", PARAM_GRID)
def test_shifted_form_rank_sequence(capsys, param):
    code, out = _run(capsys, "s2-example", "--family", "s", "--param", param)
    assert code == 0
    report = json.loads(out)["reports"]["analytic"]
    v0 = 0 if float(param) == 0 else 1
    assert report["v"] == [v0, 0, 0, 0]
    assert _weak_rhs(report)[1:3] == [4 - v0, 4 - v0]


@pytest.mark.parametrize("param", PARAM_GRID)
def test_tilted_form_rank_sequence(capsys, param):
    code, out = _run(capsys, "s2-example", "--family", "t", "--param", param)
    assert code == 0
    report = json.loads(out)["reports"]["analytic"]
    v0 = 1 if float(param) == 0 else 2
    assert report["v"] == [v0, 0, 0, 0]
    assert report["b_psi"] == [1, 0, 0, 1]
    assert _weak_rhs(report)[1:3] == [4 - v0, 4 - v0]


def test_s2_example_perfect(capsys):
    code, out = _run(capsys, "s2-example", "--family", "perfect")
    assert code == 0
    report = json.loads(out)["reports"]["analytic"]
    assert report["perfect"]
    assert all(rec["slack"] == 0 for rec in report["weak_bounds"] + report["strong_bounds"])


def test_s2_example_both_modes_agree(capsys, isolated):
    code, out = _run(capsys, "s2-example", "--family", "t", "--param", "0.2", "--mode", "both",
                     "--grid", "32", "64", "--step", "0.01", "--cells-csv", "cells.csv")
    assert code == 0
    payload = json.loads(out)
    assert payload["cross_check"]["passed"]
    assert payload["reports"]["numeric"]["v"] == [2, 0, 0, 0]
    cells = FileIO(str(isolated)).read_csv("cells.csv")
    assert len(cells) == 32 * 64


@pytest.mark.slow
def test_s2_example_exact_alpha(capsys):
    code, out = _run(capsys, "s2-example", "--family", "exact-alpha", "--grid", "64", "128",
                     "--step", "0.01")
    assert code == 0
    payload = json.loads(out)
    assert payload["mode"] == "numeric"
    det = payload["numeric"]["determinant"]
    report = payload["reports"]["numeric"]
    assert report["v"] == [2, 0, 0, 0]
    exact = [rec for rec in report["checks"] if rec["source"] == "cone-morse/exact-form"]
    assert {(rec["degree"], rec["lhs"], rec["rhs"]) for rec in exact} >= {(1, 0, 0)}
    assert det["determinant"] == pytest.approx(det["product"], rel=1e-6)
    for entry in payload["numeric"]["stokes"].values():
        assert entry["boundary"] == pytest.approx(entry["region"], abs=0.05)


@pytest.mark.slow
def test_s2_example_metric_perturbation(capsys):
    code, out = _run(capsys, "s2-example", "--family", "metric-eps", "--grid", "64", "128",
                     "--step", "0.01")
    assert code == 0
    payload = json.loads(out)
    assert payload["param"] == 0.2
    report = payload["reports"]["numeric"]
    assert report["v"] == [2, 0, 0, 0]
    assert report["r"] == [1, 0, 0, 0]


def test_grid_must_fit_the_quarter_spheres(capsys):
    code, out = _run(capsys, "s2-example", "--family", "s", "--mode", "numeric", "--grid", "30", "64")
    assert code == 2
    assert out == ""


def test_randcheck_is_deterministic(capsys):
    first = _run(capsys, "randcheck", "--trials", "12", "--seed", "42")
    second = _run(capsys, "randcheck", "--trials", "12", "--seed", "42")
    assert first == second
    payload = json.loads(first[1])
    assert first[0] == 0
    assert payload["passed"] == 12
    assert payload["failing_seeds"] == []


def test_randcheck_without_trials(capsys):
    code, out = _run(capsys, "randcheck", "--trials", "0", "--seed", "5")
    assert code == 0
    payload = json.loads(out)
    assert payload["passed"] == 0
    assert payload["results"] == []


def test_randcheck_csv(capsys):
    code, out = _run(capsys, "randcheck", "--trials", "3", "--seed", "1", "--ell", "2", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "trial,seed,ell,degenerate,cone_dims,passed,failed_checks,error"
    assert len(lines) == 4


def test_randcheck_needs_a_seed():
    with pytest.raises(SystemExit) as err:
        main(["randcheck", "--trials", "3"])
    assert err.value.code == 2


def test_randcheck_rejects_negative_trials(capsys):
    code, _ = _run(capsys, "randcheck", "--trials", "-1", "--seed", "1")
    assert code == 2


def test_invalid_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("CONEMORSE_THREADS", "zero")
    code, _ = _run(capsys, "morse-report", "s2_height")
    assert code == 2


def test_report_written_to_file(capsys, isolated):
    code, out = _run(capsys, "morse-report", "s2_height", "--out", "reports/height.json")
    assert code == 0
    assert out == ""
    report = json.loads((isolated / "reports" / "height.json").read_text(encoding="utf-8"))["report"]
    assert report["perfect"]
