"""
Differential forms on the unit sphere, represented by ambient fields.

A two-form is psi = rho * omega_0 with omega_0 = sin(phi) dphi ^ dtheta the
area form, and ``rho`` a function of the ambient point. A one-form is the
tangential part of an ambient covector field A; its exterior derivative has
density (curl A) . x.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from core.errors import NonFiniteEntry, PoleSingularity
from geometry.scene import bump, geodesic_distance, normalize, spherical_to_xyz, tangent_part

logger = logging.getLogger(__name__)

POLE_CAP = 0.05
CAP_RING_POINTS = 32
CURL_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class TwoForm:
    """
    psi = density(x) * omega_0.

    ``affine`` holds (a0, ax, ay, az) when density = a0 + ax x + ay y + az z,
    which lets quarter-sphere integrals be written in closed form.
    """
    density_fn: object
    tag: str = "custom"
    affine: tuple = None

    def density(self, xyz):
        values = np.asarray(self.density_fn(normalize(xyz)), dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteEntry(f"two-form '{self.tag}' has a non-finite density")
        return values

    def evaluate(self, phi, theta):
        return self.density(spherical_to_xyz(phi, theta))

    @classmethod
    def from_affine(cls, a0=0.0, ax=0.0, ay=0.0, az=0.0, tag="custom"):
        coeffs = np.array([ax, ay, az], dtype=float)

        def density(xyz):
            return a0 + xyz @ coeffs

        return cls(density, tag, (float(a0), float(ax), float(ay), float(az)))

    def scaled(self, factor):
        affine = None if self.affine is None else tuple(factor * a for a in self.affine)
        return TwoForm(lambda xyz: factor * self.density_fn(xyz), f"{factor}*{self.tag}", affine)


def area_form():
    return TwoForm.from_affine(a0=1.0, tag="omega_0")


def family_s(s):
    """psi_s = (y + s) omega_0"""
    return TwoForm.from_affine(a0=s, ay=1.0, tag=f"psi_s({s})")


def family_t(t):
    """psi_t = (1 + t x + t z) omega_0"""
    return TwoForm.from_affine(a0=1.0, ax=t, az=t, tag=f"psi_t({t})")


@dataclass(frozen=True, eq=False)
class OneForm:
    """
    Tangential part of an ambient covector field.

    Args:
        field_fn: x -> A(x) on arrays of shape (..., 3)
        curl_fn: optional analytic curl of A; central differences otherwise
        pole_regular (bool): the form is smooth at the poles. Forms built from
            spherical components are evaluated in the polar caps only when
            this is set
        from_chart (bool): built from (alpha_phi, alpha_theta) components
    """
    field_fn: object
    curl_fn: object = None
    tag: str = "custom"
    pole_regular: bool = True
    from_chart: bool = False

    def _raw(self, xyz):
        values = np.asarray(self.field_fn(xyz), dtype=float)
        return np.broadcast_to(values, np.shape(xyz)).copy()

    def covector(self, xyz):
        xyz = normalize(xyz)
        values = tangent_part(xyz, self._raw(xyz))
        if not np.all(np.isfinite(values)):
            raise NonFiniteEntry(f"one-form '{self.tag}' is not finite on the evaluation points")
        return values

    def components(self, phi, theta):
        """(alpha_phi, alpha_theta) at the given spherical coordinates."""
        phi = np.asarray(phi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        a = self.covector(spherical_to_xyz(phi, theta))
        d_phi = np.stack([np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), -np.sin(phi)], axis=-1)
        d_theta = np.stack([-np.sin(phi) * np.sin(theta), np.sin(phi) * np.cos(theta),
                            np.zeros_like(phi)], axis=-1)
        return np.sum(a * d_phi, axis=-1), np.sum(a * d_theta, axis=-1)

    def curl(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        if self.curl_fn is not None:
            return np.broadcast_to(np.asarray(self.curl_fn(xyz), dtype=float), xyz.shape)
        h = CURL_STEP
        jac = np.empty(xyz.shape + (3,))
        for j in range(3):
            step = np.zeros(3)
            step[j] = h
            jac[..., :, j] = (self._raw(xyz + step) - self._raw(xyz - step)) / (2 * h)
        return np.stack([jac[..., 2, 1] - jac[..., 1, 2],
                         jac[..., 0, 2] - jac[..., 2, 0],
                         jac[..., 1, 0] - jac[..., 0, 1]], axis=-1)

    def __add__(self, other):
        curl = None
        if self.curl_fn is not None and other.curl_fn is not None:
            curl = lambda xyz: self.curl(xyz) + other.curl(xyz)  # noqa: E731
        return OneForm(lambda xyz: self._raw(xyz) + other._raw(xyz), curl,
                       f"{self.tag}+{other.tag}", self.pole_regular and other.pole_regular,
                       self.from_chart or other.from_chart)

    @classmethod
    def from_components(cls, alpha_phi, alpha_theta, pole_regular=False, tag="chart"):
        """
        One-form with the given spherical components.

        Inside the polar caps of radius ``POLE_CAP`` a pole-regular form takes
        the mean of its ambient covector over the cap boundary; any other form
        raises PoleSingularity there.
        """

        def chart_field(xyz):
            xyz = normalize(xyz)
            phi = np.arccos(np.clip(xyz[..., 2], -1.0, 1.0))
            theta = np.mod(np.arctan2(xyz[..., 1], xyz[..., 0]), 2 * math.pi)
            out = np.empty(xyz.shape)
            cap = (phi < POLE_CAP) | (phi > math.pi - POLE_CAP)
            if np.any(cap) and not pole_regular:
                raise PoleSingularity(f"one-form '{tag}' evaluated inside a polar cap")
            chart = ~cap
            p, t = phi[chart], theta[chart]
            out[chart] = _ambient_from_components(alpha_phi(p, t), alpha_theta(p, t), p, t)
            if np.any(cap):
                north, south = _cap_means(alpha_phi, alpha_theta)
                out[cap] = np.where((xyz[cap][:, 2] > 0)[:, None], north, south)
            return out

        return cls(chart_field, None, tag, pole_regular, True)


def _ambient_from_components(a_phi, a_theta, phi, theta):
    a_phi = np.broadcast_to(np.asarray(a_phi, dtype=float), np.shape(phi))
    a_theta = np.broadcast_to(np.asarray(a_theta, dtype=float), np.shape(phi))
    e_phi = np.stack([np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), -np.sin(phi)], axis=-1)
    e_theta = np.stack([-np.sin(theta), np.cos(theta), np.zeros_like(theta)], axis=-1)
    return a_phi[..., None] * e_phi + (a_theta / np.sin(phi))[..., None] * e_theta


def _cap_means(alpha_phi, alpha_theta):
    theta = np.arange(CAP_RING_POINTS) * 2 * math.pi / CAP_RING_POINTS
    means = []
    for edge in (POLE_CAP, math.pi - POLE_CAP):
        phi = np.full_like(theta, edge)
        ring = _ambient_from_components(alpha_phi(phi, theta), alpha_theta(phi, theta), phi, theta)
        means.append(ring.mean(axis=0))
    return means[0], means[1]


def exterior_derivative(alpha):
    """d alpha as a two-form with density (curl A) . x."""

    def density(xyz):
        xyz = normalize(xyz)
        return np.sum(alpha.curl(xyz) * xyz, axis=-1)

    return TwoForm(density, f"d({alpha.tag})")


def zero_one_form():
    return OneForm(lambda xyz: np.zeros(np.shape(xyz)), lambda xyz: np.zeros(np.shape(xyz)), "zero")


def line_integral(alpha, curve):
    """
    Trapezoid-rule integral of ``alpha`` along a polyline.

    Args:
        alpha (OneForm): form to integrate
        curve: array of shape (n, 3) of points on the sphere

    Returns:
        float
    """
    points = np.asarray(curve, dtype=float)
    if len(points) < 2:
        return 0.0
    values = alpha.covector(points)
    chords = np.diff(points, axis=0)
    return float(np.sum(0.5 * np.sum((values[:-1] + values[1:]) * chords, axis=-1)))


def integrate_over_sphere(psi, n_phi=128, n_theta=256):
    """Midpoint-rule integral of ``psi`` over S^2."""
    d_phi = math.pi / n_phi
    d_theta = 2 * math.pi / n_theta
    phi = (np.arange(n_phi) + 0.5) * d_phi
    theta = (np.arange(n_theta) + 0.5) * d_theta
    pp, tt = np.meshgrid(phi, theta, indexing="ij")
    weights = np.sin(pp) * d_phi * d_theta
    return float(np.sum(psi.evaluate(pp, tt) * weights))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _monomial_exponents(degree):
    return [(i, j, k) for i in range(degree + 1) for j in range(degree + 1 - i)
            for k in range(degree + 1 - i - j)]


@dataclass(frozen=True, eq=False)
class PolynomialFunction:
    """h(x, y, z) = sum c_ijk x^i y^j z^k"""
    exponents: tuple
    coefficients: tuple = field(default=())

    def __call__(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        out = np.zeros(xyz.shape[:-1])
        for (i, j, k), c in zip(self.exponents, self.coefficients):
            out = out + c * xyz[..., 0] ** i * xyz[..., 1] ** j * xyz[..., 2] ** k
        return out

    def gradient(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
        out = np.zeros(xyz.shape)
        for (i, j, k), c in zip(self.exponents, self.coefficients):
            if i:
                out[..., 0] += c * i * x ** (i - 1) * y ** j * z ** k
            if j:
                out[..., 1] += c * j * x ** i * y ** (j - 1) * z ** k
            if k:
                out[..., 2] += c * k * x ** i * y ** j * z ** (k - 1)
        return out


def random_polynomial_function(rng, degree=3, scale=1.0):
    exponents = tuple(_monomial_exponents(degree))
    coefficients = tuple(float(c) for c in scale * rng.standard_normal(len(exponents)))
    return PolynomialFunction(exponents, coefficients)


def exact_one_form(h, tag="dh"):
    """dh for a function with an ambient ``gradient``; its curl vanishes."""
    return OneForm(h.gradient, lambda xyz: np.zeros(np.shape(xyz)), tag)


def random_polynomial_one_form(rng, degree=2, scale=1.0):
    """Tangential part of a vector field with random polynomial components."""
    components = [random_polynomial_function(rng, degree, scale) for _ in range(3)]

    def field_fn(xyz):
        return np.stack([c(xyz) for c in components], axis=-1)

    def curl_fn(xyz):
        gx, gy, gz = (c.gradient(xyz) for c in components)
        return np.stack([gz[..., 1] - gy[..., 2], gx[..., 2] - gz[..., 0], gy[..., 0] - gx[..., 1]], axis=-1)

    return OneForm(field_fn, curl_fn, "polynomial")


def localized_one_form(centers, directions, radius=0.3, amplitude=1.0, tag="localized"):
    """
    sum_i amplitude * beta(d(x, c_i)) * v_i, tangentially projected.

    ``directions`` are ambient vectors; along a curve through c_i with
    tangent v_i the form is positive.
    """
    centers = [normalize(np.array(c, dtype=float)) for c in centers]
    directions = [np.array(v, dtype=float) for v in directions]
    if len(centers) != len(directions):
        raise ValueError("need one direction per centre")

    def field_fn(xyz):
        out = np.zeros(np.shape(xyz))
        for c, v in zip(centers, directions):
            out = out + amplitude * bump(geodesic_distance(xyz, c), radius)[..., None] * v
        return out

    return OneForm(field_fn, None, tag)


def random_localized_one_form(rng, count=4, radius=0.3):
    """Bumps with random centres, directions and amplitudes."""
    centers = normalize(rng.standard_normal((count, 3)))
    directions = rng.standard_normal((count, 3))
    amplitudes = rng.uniform(0.5, 2.0, size=count)
    directions = directions * amplitudes[:, None]
    return localized_one_form(list(centers), list(directions), radius=radius, tag="random localized")
