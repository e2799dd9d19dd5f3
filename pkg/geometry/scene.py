"""
Scenes on the unit sphere: a Morse function, a metric and the numerical
settings used to follow its negative gradient flow.

Points are ambient unit vectors in R^3 throughout; fields accept arrays of
shape (..., 3) and normalise their input first.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from core.errors import InvalidScene

logger = logging.getLogger(__name__)

MAX_BUMP_RADIUS = math.pi / 4


def normalize(xyz):
    xyz = np.asarray(xyz, dtype=float)
    return xyz / np.linalg.norm(xyz, axis=-1, keepdims=True)


def tangent_part(xyz, vectors):
    """Project ambient vectors onto the tangent planes at the unit points ``xyz``."""
    return vectors - np.sum(vectors * xyz, axis=-1, keepdims=True) * xyz


def spherical_to_xyz(phi, theta):
    """phi is the polar angle from +z, theta the azimuth from +x."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)], axis=-1)


def xyz_to_spherical(xyz):
    xyz = normalize(xyz)
    phi = np.arccos(np.clip(xyz[..., 2], -1.0, 1.0))
    theta = np.mod(np.arctan2(xyz[..., 1], xyz[..., 0]), 2 * math.pi)
    return phi, theta


def geodesic_distance(xyz, center):
    return np.arccos(np.clip(np.sum(normalize(xyz) * normalize(center), axis=-1), -1.0, 1.0))


@dataclass(frozen=True)
class CriticalPoint3:
    """A critical point of a Morse function on S^2 with its position."""
    id: str
    index: int
    position: tuple


class MorseFunction:
    """Base for the supported Morse functions; subclasses fill in the data."""

    name = ""
    critical_points = ()
    # saddle id -> (unstable direction e_u, stable direction e_s)
    saddle_frames = {}

    def value(self, xyz):
        raise NotImplementedError

    def ambient_gradient(self, xyz):
        raise NotImplementedError

    def point(self, pid):
        for cp in self.critical_points:
            if cp.id == pid:
                return cp
        raise KeyError(pid)

    def points_of_index(self, k):
        return [cp for cp in self.critical_points if cp.index == k]

    def positions(self, k):
        return np.array([cp.position for cp in self.points_of_index(k)], dtype=float).reshape(-1, 3)

    def critical_value(self, cp):
        return float(self.value(np.array(cp.position, dtype=float)))

    def forward_capture_level(self):
        """Lowest critical value above the minima; below it every component holds one minimum."""
        values = [self.critical_value(cp) for cp in self.critical_points if cp.index > 0]
        return min(values)

    def backward_capture_level(self):
        values = [self.critical_value(cp) for cp in self.critical_points if cp.index < 2]
        return max(values)

    def value_range(self):
        values = [self.critical_value(cp) for cp in self.critical_points]
        return max(values) - min(values)


class QuadraticMorseFunction(MorseFunction):
    """
    f = x^2 + 2y^2 + 3z^2

    Minima p0^(+-) = (+-1, 0, 0), saddles p1^(+-) = (0, +-1, 0) and maxima
    p2^(+-) = (0, 0, +-1). At each saddle the descending flow leaves along
    the x axis and arrives along the z axis.
    """

    name = "quadratic"
    coefficients = (1.0, 2.0, 3.0)
    critical_points = (
        CriticalPoint3("p0+", 0, (1.0, 0.0, 0.0)),
        CriticalPoint3("p0-", 0, (-1.0, 0.0, 0.0)),
        CriticalPoint3("p1+", 1, (0.0, 1.0, 0.0)),
        CriticalPoint3("p1-", 1, (0.0, -1.0, 0.0)),
        CriticalPoint3("p2+", 2, (0.0, 0.0, 1.0)),
        CriticalPoint3("p2-", 2, (0.0, 0.0, -1.0)),
    )
    saddle_frames = {
        "p1+": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
        "p1-": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    }

    def value(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        return xyz[..., 0] ** 2 + 2.0 * xyz[..., 1] ** 2 + 3.0 * xyz[..., 2] ** 2

    def ambient_gradient(self, xyz):
        return 2.0 * np.asarray(xyz, dtype=float) * np.array(self.coefficients)


class HeightFunction(MorseFunction):
    """f = z, a perfect Morse function with a minimum S and a maximum N."""

    name = "height"
    critical_points = (
        CriticalPoint3("S", 0, (0.0, 0.0, -1.0)),
        CriticalPoint3("N", 2, (0.0, 0.0, 1.0)),
    )
    saddle_frames = {}

    def value(self, xyz):
        return np.asarray(xyz, dtype=float)[..., 2]

    def ambient_gradient(self, xyz):
        xyz = np.asarray(xyz, dtype=float)
        out = np.zeros_like(xyz)
        out[..., 2] = 1.0
        return out


MORSE_FUNCTIONS = {
    "quadratic": QuadraticMorseFunction,
    "height": HeightFunction,
}


def bump(distance, radius):
    """exp(1 - 1/(1 - (d/R)^2)) inside the disc, 0 outside; equals 1 at the centre."""
    u = np.asarray(distance, dtype=float) / radius
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class RoundMetric:
    kind = "round"

    def gradient(self, function, xyz):
        """Riemannian gradient of ``function`` at unit points ``xyz``."""
        return tangent_part(xyz, function.ambient_gradient(xyz))

    def describe(self):
        return {"kind": "round"}


@dataclass(frozen=True)
class PerturbedMetric:
    """
    Round metric modified inside a geodesic disc.

    ``kind="shear"``: the inverse metric becomes P + eps*beta*(a b^T + b a^T),
    with a the unit descending direction of f at the centre transported to x
    by projection, and b = a x x. Positive strength deflects the descending
    flow towards a x n.

    ``kind="conformal"``: the metric becomes exp(2*eps*beta) times the round
    one. This rescales the gradient without moving any flow line.
    """
    center: tuple
    radius: float
    strength: float
    kind: str = "shear"
    direction: tuple = None

    def weight(self, xyz):
        return self.strength * bump(geodesic_distance(xyz, self.center), self.radius)

    def gradient(self, function, xyz):
        round_grad = tangent_part(xyz, function.ambient_gradient(xyz))
        w = self.weight(xyz)[..., None]
        if self.kind == "conformal":
            return np.exp(-2.0 * w) * round_grad
        a = normalize(tangent_part(xyz, np.broadcast_to(np.array(self.direction), np.shape(xyz))))
        b = np.cross(a, xyz)
        grad_f = function.ambient_gradient(xyz)
        along_b = np.sum(b * grad_f, axis=-1, keepdims=True)
        along_a = np.sum(a * grad_f, axis=-1, keepdims=True)
        return round_grad + w * (a * along_b + b * along_a)

    def describe(self):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius,
                "strength": self.strength}


@dataclass(frozen=True)
class ODESettings:
    """Fixed-step RK4 settings for every flow computation on a scene."""
    step: float = 1e-3
    stop_radius: float = 1e-3
    max_steps: int = 1_000_000
    seed_offset: float = 1e-4

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidScene(f"ODE step must be positive, got {self.step}")
        if not self.stop_radius > 0:
            raise InvalidScene(f"stop_radius must be positive, got {self.stop_radius}")
        if self.max_steps < 1:
            raise InvalidScene("max_steps must be at least 1")
        if not 0 < self.seed_offset < self.stop_radius * 10:
            raise InvalidScene(f"seed_offset {self.seed_offset} out of range")


@dataclass(frozen=True)
class SurfaceScene:
    """
    A Morse function on S^2 with a metric, a cell grid and ODE settings.

    Args:
        morse_function: QuadraticMorseFunction or HeightFunction
        metric: RoundMetric or PerturbedMetric
        grid (tuple): (n_phi, n_theta) cell counts; n_phi divisible by 4 and
            n_theta by 8 so that cell centres avoid x = 0 and z = 0 and a
            half-resolution companion grid exists
        ode (ODESettings): flow integration settings
    """
    morse_function: MorseFunction = field(default_factory=QuadraticMorseFunction)
    metric: object = field(default_factory=RoundMetric)
    grid: tuple = (64, 128)
    ode: ODESettings = field(default_factory=ODESettings)

    def __post_init__(self):
        n_phi, n_theta = (int(n) for n in self.grid)
        if n_phi < 4 or n_phi % 4 or n_theta < 8 or n_theta % 8:
            raise InvalidScene(f"grid {self.grid}: n_phi must be a multiple of 4 and n_theta of 8")
        object.__setattr__(self, "grid", (n_phi, n_theta))
        if isinstance(self.metric, PerturbedMetric):
            self._check_perturbation(self.metric)

    def _check_perturbation(self, metric):
        if metric.kind not in ("shear", "conformal"):
            raise InvalidScene(f"unknown perturbation kind '{metric.kind}'")
        if not 0 < metric.radius < MAX_BUMP_RADIUS:
            raise InvalidScene(f"perturbation radius {metric.radius} must lie in (0, pi/4)")
        if metric.kind == "shear" and not abs(metric.strength) < 1:
            raise InvalidScene(f"shear strength {metric.strength} must satisfy |strength| < 1")
        center = normalize(metric.center)
        for cp in self.morse_function.critical_points:
            if geodesic_distance(np.array(cp.position), center) <= metric.radius:
                raise InvalidScene(f"perturbation disc contains critical point {cp.id}")
        if metric.kind == "shear" and metric.direction is None:
            raise InvalidScene("shear perturbation needs a direction; build it with SurfaceScene.perturbed")

    @classmethod
    def quadratic(cls, grid=(64, 128), ode=None):
        return cls(QuadraticMorseFunction(), RoundMetric(), grid, ode or ODESettings())

    @classmethod
    def height(cls, grid=(64, 128), ode=None):
        return cls(HeightFunction(), RoundMetric(), grid, ode or ODESettings())

    def perturbed(self, center, radius, strength, kind="shear"):
        """Copy of the scene with a bump perturbation of the metric at ``center``."""
        center = tuple(float(c) for c in normalize(center))
        c = np.array(center)
        grad = tangent_part(c, self.morse_function.ambient_gradient(c))
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            raise InvalidScene("perturbation centre is a critical point")
        direction = tuple(float(v) for v in -grad / norm)
        metric = PerturbedMetric(center, float(radius), float(strength), kind, direction)
        logger.info(f"Perturbing metric: {kind} bump at {center}, radius {radius}, strength {strength}")
        return replace(self, metric=metric)

    def with_grid(self, grid):
        return replace(self, grid=tuple(grid))

    def descent(self, xyz):
        """Negative gradient vector field -grad_g f at (normalised) points."""
        xyz = normalize(xyz)
        return -self.metric.gradient(self.morse_function, xyz)

    @property
    def critical_points(self):
        return self.morse_function.critical_points

    def cell_centers(self, grid=None):
        """(phi, theta) centres of the grid cells and the cell sizes."""
        n_phi, n_theta = grid or self.grid
        d_phi = math.pi / n_phi
        d_theta = 2 * math.pi / n_theta
        phi = (np.arange(n_phi) + 0.5) * d_phi
        theta = (np.arange(n_theta) + 0.5) * d_theta
        return phi, theta, d_phi, d_theta

    def describe(self):
        return {
            "morse_function": self.morse_function.name,
            "metric": self.metric.describe(),
            "grid": list(self.grid),
            "ode": {"step": self.ode.step, "stop_radius": self.ode.stop_radius,
                    "max_steps": self.ode.max_steps, "seed_offset": self.ode.seed_offset},
        }
