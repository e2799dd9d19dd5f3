import math

import numpy as np
import pytest

from core.errors import NonFiniteEntry, PoleSingularity
from geometry.forms import (
    OneForm,
    PolynomialFunction,
    TwoForm,
    area_form,
    exact_one_form,
    exterior_derivative,
    family_s,
    family_t,
    integrate_over_sphere,
    line_integral,
    localized_one_form,
    zero_one_form,
)
from geometry.scene import spherical_to_xyz

Z = PolynomialFunction(((0, 0, 1),), (1.0,))


def test_area_of_the_sphere():
    assert integrate_over_sphere(area_form()) == pytest.approx(4 * math.pi, rel=1e-4)


def test_affine_families():
    assert integrate_over_sphere(family_s(0.5)) == pytest.approx(2 * math.pi, rel=1e-4)
    assert family_t(0.2).affine == (1.0, 0.2, 0.0, 0.2)
    assert family_s(0.3).scaled(2.0).affine == (0.6, 0.0, 2.0, 0.0)


def test_two_form_rejects_non_finite_density():
    psi = TwoForm(lambda xyz: np.full(np.shape(xyz)[:-1], np.nan), "bad")
    with pytest.raises(NonFiniteEntry):
        psi.density(np.array([[0.0, 0.0, 1.0]]))


def test_components_of_dz():
    phi = np.array([0.3, 1.2, 2.5])
    theta = np.array([0.1, 2.0, 4.0])
    a_phi, a_theta = exact_one_form(Z).components(phi, theta)
    assert np.allclose(a_phi, -np.sin(phi))
    assert np.allclose(a_theta, 0.0)


def test_curl_by_central_differences():
    # A = (-y, x, 0) / 2 has curl e_z, so d alpha = z omega_0
    alpha = OneForm(lambda xyz: np.stack([-xyz[..., 1] / 2, xyz[..., 0] / 2, 0 * xyz[..., 2]], axis=-1))
    points = spherical_to_xyz(np.array([0.4, 1.0, 2.2]), np.array([0.3, 3.0, 5.0]))
    density = exterior_derivative(alpha).density(points)
    assert np.allclose(density, points[:, 2], atol=1e-8)


def test_exact_forms_are_closed():
    points = spherical_to_xyz(np.array([0.4, 1.0]), np.array([0.3, 3.0]))
    assert np.all(exterior_derivative(exact_one_form(Z)).density(points) == 0.0)


def test_line_integral_around_the_equator():
    theta = np.linspace(0.0, 2 * math.pi, 2001)
    equator = spherical_to_xyz(np.full_like(theta, math.pi / 2), theta)
    half_dtheta = OneForm.from_components(lambda p, t: 0 * p, lambda p, t: 0.5 + 0 * p)
    assert line_integral(half_dtheta, equator) == pytest.approx(math.pi, rel=1e-4)
    assert line_integral(zero_one_form(), equator) == 0.0
    assert line_integral(half_dtheta, equator[:1]) == 0.0


def test_line_integral_of_exact_form_telescopes():
    theta = np.linspace(0.0, 1.0, 501)
    arc = spherical_to_xyz(theta + 0.2, theta)
    expected = Z(arc[-1]) - Z(arc[0])
    assert line_integral(exact_one_form(Z), arc) == pytest.approx(expected, abs=1e-5)


def test_chart_forms_at_the_poles():
    north = np.array([[0.0, 0.0, 1.0]])
    dtheta = OneForm.from_components(lambda p, t: 0 * p, lambda p, t: 1.0 + 0 * p)
    with pytest.raises(PoleSingularity):
        dtheta.covector(north)
    dz = OneForm.from_components(lambda p, t: -np.sin(p), lambda p, t: 0 * p, pole_regular=True)
    assert np.all(np.isfinite(dz.covector(north)))


def test_localized_form_vanishes_away_from_its_centres():
    r = math.sqrt(0.5)
    alpha = localized_one_form([(r, r, 0.0)], [(r, -r, 0.0)], radius=0.3)
    far = spherical_to_xyz(np.array([0.2, 2.9]), np.array([0.0, 1.0]))
    assert np.all(alpha.covector(far) == 0.0)
    assert alpha.covector(np.array([[r, r, 0.0]])) @ np.array([r, -r, 0.0]) > 0
