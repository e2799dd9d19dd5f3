from dataclasses import replace

import pytest

from core.errors import (
    BoundaryNotSquareZero,
    InequalityViolated,
    InvalidRanks,
    LeibnizViolation,
    SchemaError,
    ShapeMismatch,
)
from core.morse_core import (
    CriticalPoint,
    DeRhamData,
    MorseData,
    assemble_boundary,
    assemble_cpsi,
    bpsi_from_de_rham,
    cone_morse_complex,
    inequality_report,
    leibniz_residual,
    report_range,
)
from core.chain_core import cohomology_dims
from geometry.forms import area_form, family_s, family_t
from geometry.sphere_lab import analytic_height_data, analytic_morse_data, quadratic_flow_counts

SPHERE_POINTS = tuple(CriticalPoint(pid, k) for pid, k in
                      (("p0+", 0), ("p0-", 0), ("p1+", 1), ("p1-", 1), ("p2+", 2), ("p2-", 2)))


def _weak(report):
    return [rec.rhs for rec in report.weak_bounds]


def test_report_range():
    assert report_range(2, 2) == (0, 3)
    assert report_range(2, 1) == (0, 2)
    assert report_range(2, 0) == (-1, 2)


def test_quadratic_function_with_shifted_form(test_data):
    data = test_data.load_morse_data("s2_quadratic")
    report = inequality_report(data)
    d = report.to_dict()
    assert d["degrees"] == [0, 1, 2, 3]
    assert d["m"] == [2, 2, 2, 0]
    assert d["v"] == [1, 0, 0, 0]
    assert d["b_psi"] == [1, 0, 0, 1]
    assert d["cone_cohomology"] == [1, 0, 0, 1]
    assert d["morse_betti"] == [1, 0, 1, 0]
    assert _weak(report) == [2, 3, 3, 2]
    assert d["q_certificate"] == {"min_degree": 0, "coefficients": [1, 2, 1]}
    assert report.passed
    assert not report.perfect


def test_exact_form_gives_zero_cone_rank():
    report = inequality_report(analytic_morse_data(family_s(0.0)))
    assert report.v.is_zero()
    assert report.b_psi.dense(0, 3) == [1, 1, 1, 1]
    assert _weak(report) == [2, 4, 4, 2]
    assert report.passed


def test_non_degenerate_family_reaches_full_rank():
    report = inequality_report(analytic_morse_data(family_t(0.2)))
    assert report.v.dense(0, 2) == [2, 0, 0]
    assert report.r.dense(0, 2) == [1, 0, 0]
    assert _weak(report) == [2, 2, 2, 2]
    assert report.passed


def test_height_function_is_perfect():
    report = inequality_report(analytic_height_data(area_form()))
    assert report.perfect
    assert report.q_certificate.is_zero()
    assert all(rec.slack == 0 for rec in report.weak_bounds)
    assert all(rec.slack == 0 for rec in report.strong_bounds)


def test_torus_with_closed_one_form(test_data):
    report = inequality_report(test_data.load_morse_data("t2_perfect_dtheta"))
    assert report.ell == 1
    assert report.v.dense(0, 2) == [1, 1, 0]
    assert report.r.dense(0, 2) == [1, 1, 0]
    assert report.b_psi.dense(0, 2) == [1, 2, 1]
    assert report.q_certificate.is_zero()
    assert report.perfect
    assert all(rec.slack == 0 for rec in report.weak_bounds)


def test_torus_without_de_rham_uses_morse_side(test_data):
    data = replace(test_data.load_morse_data("t2_perfect_dtheta"), de_rham=None)
    report = inequality_report(data)
    assert report.b_psi_source == "Morse"
    assert report.b_psi.dense(0, 2) == [1, 2, 1]
    assert report.r is None


def test_empty_manifold():
    report = inequality_report(MorseData(dimension=0, points=()))
    assert report.passed
    assert report.b_psi.is_zero()


def test_boundary_must_square_to_zero():
    counts = dict(quadratic_flow_counts())
    counts[("p2+", "p1-")] = -counts[("p2+", "p1-")]
    data = MorseData(dimension=2, points=SPHERE_POINTS, flow_counts=counts)
    with pytest.raises(BoundaryNotSquareZero):
        assemble_boundary(data)


def test_boundary_of_the_quadratic_function():
    data = MorseData(dimension=2, points=SPHERE_POINTS, flow_counts=quadratic_flow_counts())
    boundary = assemble_boundary(data)
    assert boundary.block(0).to_list() == [[-1.0, 1.0], [-1.0, 1.0]]
    assert boundary.block(1).to_list() == [[1.0, -1.0], [-1.0, 1.0]]


def test_closed_flag_is_checked():
    pairs = [(s, q) for s in ("p1+", "p1-") for q in ("p0+", "p0-")]
    pairs += [(r, s) for r in ("p2+", "p2-") for s in ("p1+", "p1-")]
    data = MorseData(dimension=2, points=SPHERE_POINTS, flow_counts=quadratic_flow_counts(),
                     psi_degree=1, psi_integrals={p: 1.0 for p in pairs})
    with pytest.raises(LeibnizViolation):
        data.validate()
    with pytest.raises(LeibnizViolation):
        cone_morse_complex(replace(data, psi_closed=False))
    # not flagged closed: only the shapes are checked
    assert assemble_cpsi(replace(data, psi_closed=False)).degree == 1


def test_leibniz_residual_checks_degrees():
    data = analytic_morse_data(family_s(0.3))
    boundary = assemble_boundary(data)
    c_psi = assemble_cpsi(data)
    assert leibniz_residual(boundary, c_psi, None, 2) == 0.0
    with pytest.raises(ShapeMismatch):
        leibniz_residual(boundary, c_psi, None, 1)


def test_cone_complex_matches_the_report(test_data):
    data = test_data.load_morse_data("s2_quadratic")
    dims = cohomology_dims(cone_morse_complex(data))
    assert dims.as_polynomial().dense(0, 3) == [1, 0, 0, 1]


def test_bpsi_from_de_rham():
    assert bpsi_from_de_rham((1, 0, 1), (1, 0, 0), 2).dense(0, 3) == [1, 0, 0, 1]
    assert bpsi_from_de_rham((1, 2, 1), (1, 1, 0), 1).dense(0, 2) == [1, 2, 1]
    # c(1) is the identity: the cone is acyclic
    assert bpsi_from_de_rham((1, 0, 1), (1, 0, 1), 0).is_zero()
    with pytest.raises(InvalidRanks):
        bpsi_from_de_rham((1, 0, 1), (2, 0, 0), 2)
    with pytest.raises(InvalidRanks):
        bpsi_from_de_rham((1, 0, 1), (0, 1, 0), 0)


def test_contradictory_de_rham_data_is_reported():
    data = replace(analytic_morse_data(family_s(0.3)), de_rham=DeRhamData((1, 0, 1), (0, 0, 0)))
    with pytest.raises(InequalityViolated) as err:
        inequality_report(data)
    report = err.value.report
    assert not report.passed
    names = {rec.name for rec in report.violations()}
    assert "cone Morse cohomology matches de Rham" in names
    assert "cup rank equals induced rank on Morse cohomology" in names

    quiet = inequality_report(data, raise_on_violation=False)
    assert quiet.violations()


def test_schema_checks_on_construction():
    with pytest.raises(SchemaError):
        MorseData(dimension=2, points=(CriticalPoint("a", 3),))
    with pytest.raises(SchemaError):
        MorseData(dimension=2, points=(CriticalPoint("a", 0), CriticalPoint("a", 1)))
    with pytest.raises(SchemaError):
        MorseData(dimension=2, points=SPHERE_POINTS, flow_counts={("p2+", "p0+"): 1})
    with pytest.raises(SchemaError):
        MorseData(dimension=2, points=SPHERE_POINTS, psi_integrals={("p2+", "nowhere"): 1.0})
    with pytest.raises(SchemaError):
        MorseData(dimension=2, points=SPHERE_POINTS, de_rham=DeRhamData((1, 0), (0, 0)))


def test_records_serialise():
    report = inequality_report(analytic_morse_data(family_s(0.3)))
    rows = report.to_rows()
    assert rows
    assert set(rows[0]) == {"dataset", "name", "source", "degree", "lhs", "rhs", "relation", "slack", "holds"}
    assert all(row["holds"] for row in rows)


def test_every_record_cites_its_statement(test_data):
    report = inequality_report(test_data.load_morse_data("s2_quadratic"))
    by_name = {rec.name: rec.source for rec in report.records()}
    assert by_name["weak cone Morse inequality"] == "cone-morse/weak"
    assert by_name["strong cone Morse inequality"] == "cone-morse/strong"
    assert by_name["cone lower bound"] == "cone-morse/two-sided-bounds"
    assert by_name["cone Morse cohomology matches de Rham"] == "cone-morse/quasi-isomorphism"
    assert by_name["rank gap bounded by excess critical points"] == "cone-morse/surface-rank-gap"
    assert all(row["source"] for row in report.to_rows())


def test_open_form_without_de_rham_data_is_rejected():
    data = replace(analytic_morse_data(family_s(0.3)), psi_closed=False, de_rham=None)
    with pytest.raises(SchemaError, match="undetermined"):
        inequality_report(data, raise_on_violation=False)


def test_closed_form_without_de_rham_data_uses_the_cone():
    data = replace(analytic_morse_data(family_s(0.3)), de_rham=None)
    report = inequality_report(data)
    assert report.b_psi_source == "Morse"
    assert report.to_dict()["b_psi"] == [1, 0, 0, 1]
