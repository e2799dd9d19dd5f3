import math

import numpy as np
import pytest

from commands.s2_example import BUMP_CENTER, BUMP_RADIUS, DEFAULT_PARAMS, bump_one_form
from core.errors import InvalidScene, NonTransverseSuspected
from core.morse_core import inequality_report, leibniz_residual
from geometry.forms import (
    area_form,
    exact_one_form,
    exterior_derivative,
    family_s,
    family_t,
    localized_one_form,
    random_localized_one_form,
    random_polynomial_function,
    random_polynomial_one_form,
)
from geometry.scene import ODESettings, SurfaceScene
from geometry.sphere_lab import (
    COLS,
    ROWS,
    analytic_cpsi,
    classify_moduli,
    cpsi_from_function,
    cpsi_from_one_form,
    cpsi_from_two_form,
    cpsi_matrix,
    de_rham_r0,
    exact_form_cpsi,
    flow_counts,
    integrate_over_moduli,
    morse_boundary,
    quadratic_flow_counts,
    scene_to_morse_data,
    stokes_residuals,
)

random_seed = 44
TEST_ODE = ODESettings(step=0.01)
QUARTERS = [(r, q) for r in ROWS for q in COLS]


def test_quarter_spheres(quadratic_decomp):
    assert quadratic_decomp.pairs() == QUARTERS
    for area in quadratic_decomp.areas().values():
        assert area == pytest.approx(math.pi, rel=1e-2)
    assert quadratic_decomp.separatrix_fraction() == 0.0
    assert quadratic_decomp.companion.forward.shape == (16, 32)


def test_cell_table(quadratic_decomp):
    frame = quadratic_decomp.to_frame()
    assert len(frame) == 32 * 64
    assert list(frame.columns) == ["cell_phi", "cell_theta", "phi", "theta", "forward_limit",
                                   "backward_limit", "region", "separatrix"]
    assert set(frame["region"]) == {f"M({r},{q})" for r, q in QUARTERS}


def test_flow_counts_of_the_quadratic_function(quadratic_scene, quadratic_curves):
    assert flow_counts(quadratic_scene, quadratic_curves) == quadratic_flow_counts()
    boundary = morse_boundary(quadratic_scene, quadratic_curves)
    assert boundary.after(boundary).max_abs() == 0.0


def test_analytic_quarter_integrals():
    assert np.allclose(analytic_cpsi("s", 0.3).values, 0.3 * math.pi)
    t = 0.2
    expected = [[math.pi * (1 + t), math.pi], [math.pi, math.pi * (1 - t)]]
    assert np.allclose(analytic_cpsi("t", t).values, expected)
    with pytest.raises(ValueError):
        analytic_cpsi("metric-eps", 0.2)


@pytest.mark.parametrize("family, param", [("s", 0.3), ("s", 0.0), ("t", 0.2), ("t", -0.5)])
def test_numeric_integrals_match_closed_form(quadratic_decomp, family, param):
    psi = family_s(param) if family == "s" else family_t(param)
    integrals = integrate_over_moduli(quadratic_decomp, psi)
    numeric = cpsi_matrix(integrals.values).values
    assert np.max(np.abs(numeric - analytic_cpsi(family, param).values)) <= 0.01 * math.pi
    assert integrals.max_error() < 0.05


def test_de_rham_r0():
    assert de_rham_r0(area_form()) == 1
    assert de_rham_r0(family_s(0.5)) == 1
    assert de_rham_r0(family_s(0.0)) == 0


@pytest.mark.parametrize("s, v0, b_psi", [(0.3, 1, [1, 0, 0, 1]), (0.0, 0, [1, 1, 1, 1])])
def test_numeric_report_for_shifted_form(quadratic_scene, quadratic_decomp, quadratic_curves, s, v0, b_psi):
    data = scene_to_morse_data(quadratic_scene, family_s(s), quadratic_decomp, quadratic_curves)
    report = inequality_report(data)
    assert report.v[0] == v0
    assert report.b_psi.dense(0, 3) == b_psi
    assert report.cone_dims.dense(0, 3) == b_psi
    assert not report.uncertain_degrees


def test_numeric_report_reaches_full_rank(quadratic_scene, quadratic_decomp, quadratic_curves):
    report = inequality_report(scene_to_morse_data(quadratic_scene, family_t(0.2), quadratic_decomp, quadratic_curves))
    assert report.v[0] == 2
    assert report.passed


def test_height_function_scene(height_scene):
    decomp = classify_moduli(height_scene, threads=1)
    assert decomp.pairs() == [("N", "S")]
    assert decomp.areas()[("N", "S")] == pytest.approx(4 * math.pi, rel=1e-3)
    report = inequality_report(scene_to_morse_data(height_scene, area_form(), decomp))
    assert report.perfect
    assert report.q_certificate.is_zero()


@pytest.mark.parametrize("trial", range(20))
def test_leibniz_rule_for_functions(quadratic_scene, quadratic_curves, trial):
    """d c(h) - c(h) d + c(dh) = 0"""
    h = random_polynomial_function(np.random.default_rng(random_seed + trial))
    boundary = morse_boundary(quadratic_scene, quadratic_curves)
    c_h = cpsi_from_function(quadratic_scene, h, quadratic_curves)
    c_dh = cpsi_from_one_form(quadratic_scene, exact_one_form(h), quadratic_curves)
    scale = max(1.0, c_h.max_abs(), c_dh.max_abs())
    assert leibniz_residual(boundary, c_h, c_dh, 0) <= 1e-3 * scale


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(20))
def test_leibniz_rule_for_one_forms(quadratic_scene, quadratic_curves, fine_decomp, trial):
    """d c(alpha) + c(alpha) d + c(d alpha) = 0"""
    alpha = random_polynomial_one_form(np.random.default_rng(random_seed + trial))
    boundary = morse_boundary(quadratic_scene, quadratic_curves)
    c_alpha = cpsi_from_one_form(quadratic_scene, alpha, quadratic_curves)
    c_dalpha = cpsi_from_two_form(fine_decomp, exterior_derivative(alpha), quadratic_curves)
    scale = max(1.0, c_alpha.max_abs(), c_dalpha.max_abs())
    assert leibniz_residual(boundary, c_alpha, c_dalpha, 1) <= 1e-3 * scale


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(5))
def test_stokes_on_quarter_spheres(quadratic_curves, fine_decomp, trial):
    alpha = random_polynomial_one_form(np.random.default_rng(random_seed + 100 + trial))
    residuals = stokes_residuals(fine_decomp, alpha, exterior_derivative(alpha), quadratic_curves)
    scale = max(1.0, max(abs(a) for pair in residuals.values() for a in pair))
    for boundary, region in residuals.values():
        assert abs(boundary - region) <= 1e-3 * scale


def test_determinant_of_bump_form(quadratic_scene, quadratic_curves):
    report = exact_form_cpsi(bump_one_form(1.0), quadratic_scene, quadratic_curves)
    assert report.meridian > 0
    assert report.equator < 0
    assert report.determinant == pytest.approx(report.product, rel=1e-9)
    assert abs(report.determinant) > 1e-3


@pytest.mark.parametrize("trial", range(20))
def test_determinant_factorises(quadratic_scene, quadratic_curves, trial):
    alpha = random_localized_one_form(np.random.default_rng(random_seed + trial))
    report = exact_form_cpsi(alpha, quadratic_scene, quadratic_curves)
    scale = max(1.0, report.matrix.max_abs()) ** 2
    assert abs(report.determinant - report.product) <= 1e-9 * scale


def test_exact_alpha_has_vanishing_loops(quadratic_scene, quadratic_curves, rng):
    report = exact_form_cpsi(exact_one_form(random_polynomial_function(rng)), quadratic_scene, quadratic_curves)
    assert abs(report.meridian) < 1e-3
    assert abs(report.equator) < 1e-3


def test_form_supported_on_the_equator_has_zero_determinant(quadratic_scene, quadratic_curves):
    r = math.sqrt(0.5)
    alpha = localized_one_form([(r, r, 0.0)], [(r, -r, 0.0)], radius=0.3)
    report = exact_form_cpsi(alpha, quadratic_scene, quadratic_curves)
    assert report.meridian == 0.0
    assert report.determinant == 0.0
    assert report.equator != 0.0


@pytest.mark.slow
@pytest.mark.parametrize("strength", [DEFAULT_PARAMS["metric-eps"], 0.5])
def test_shear_perturbation_raises_the_cone_rank(strength):
    scene = SurfaceScene.quadratic((64, 128), TEST_ODE).perturbed(BUMP_CENTER, BUMP_RADIUS, strength)
    decomp = classify_moduli(scene, threads=2)
    data = scene_to_morse_data(scene, area_form(), decomp)
    assert dict(data.flow_counts) == quadratic_flow_counts()
    report = inequality_report(data)
    assert report.v[0] == 2
    assert report.r[0] == 1
    values = data.psi_integrals
    # the bump only moves the unstable flow line, so the basins of the minima keep their area
    for q in COLS:
        assert values[("p2+", q)] + values[("p2-", q)] == pytest.approx(2 * math.pi, rel=0.02)
    assert values[("p2+", "p0+")] < values[("p2-", "p0+")]


def test_conformal_perturbation_keeps_the_moduli(quadratic_scene, quadratic_decomp):
    scene = quadratic_scene.perturbed(BUMP_CENTER, BUMP_RADIUS, 0.5, kind="conformal")
    decomp = classify_moduli(scene, threads=1, companion=False)
    assert np.array_equal(decomp.forward, quadratic_decomp.forward)
    assert np.array_equal(decomp.backward, quadratic_decomp.backward)


def test_invalid_scenes(quadratic_scene):
    with pytest.raises(InvalidScene):
        SurfaceScene.quadratic((30, 64))
    with pytest.raises(InvalidScene):
        quadratic_scene.perturbed(BUMP_CENTER, 1.0, 0.2)
    with pytest.raises(InvalidScene):
        quadratic_scene.perturbed(BUMP_CENTER, BUMP_RADIUS, 1.5)
    with pytest.raises(InvalidScene):
        quadratic_scene.perturbed((math.cos(0.5), math.sin(0.5), 0.0), 0.6, 0.2)
    with pytest.raises(InvalidScene):
        quadratic_scene.perturbed((1.0, 0.0, 0.0), 0.3, 0.2)
    with pytest.raises(InvalidScene):
        ODESettings(step=0.0)


def test_large_stop_radius_is_reported_as_non_transverse():
    scene = SurfaceScene.quadratic((32, 64), ODESettings(step=0.01, stop_radius=0.5))
    with pytest.raises(NonTransverseSuspected):
        classify_moduli(scene, threads=1, companion=False)
