"""
Moduli spaces of the gradient flow on S^2 and the integrals that feed the
cone Morse complex.

Region M(r, q) is the set of grid cells whose backward flow tends to the
maximum r and whose forward flow tends to the minimum q. Flow lines are
oriented descending; their orientation signs against the moduli spaces are

    unstable branch of a saddle leaving along s*e_u:   n = -s, sigma = s
    stable branch arriving along s*e_s:                n = sign(v . s e_s),
                                                       sigma = -n, v = e_u x p

where n is the flow count entering the Morse differential and sigma the
sign of the descending parametrisation. Then c(alpha)(r, q) =
sigma * integral of alpha along the line and c(dh)(r, q) = n (h(r) - h(q)).
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from config.settings import get_settings
from core.errors import CrossCheckFailed, NonTransverseSuspected
from core.linalg_core import RealMatrix, auto_tolerance
from core.morse_core import CriticalPoint, DeRhamData, MorseData, assemble_boundary, assemble_cpsi
from geometry.flow import SEPARATRIX, named_flow_curves, trace_limits_parallel
from geometry.forms import integrate_over_sphere, line_integral
from geometry.scene import QuadraticMorseFunction, spherical_to_xyz

logger = logging.getLogger(__name__)

SEPARATRIX_LIMIT = 0.01
R0_RTOL = 1e-6
DET_RTOL = 1e-9

ROWS = ("p2+", "p2-")
COLS = ("p0+", "p0-")


def _sign(pid):
    return 1 if pid.endswith("+") else -1


@dataclass(frozen=True, eq=False)
class ModuliDecomposition:
    """
    Per-cell flow limits on a (phi, theta) grid.

    ``forward`` and ``backward`` hold critical point ids per cell after
    separatrix resolution; ``separatrix`` marks cells whose own trajectory
    was ambiguous. ``companion`` is the same classification at half
    resolution, used for quadrature error estimates.
    """
    scene: object
    phi: np.ndarray
    theta: np.ndarray
    d_phi: float
    d_theta: float
    forward: np.ndarray
    backward: np.ndarray
    separatrix: np.ndarray
    companion: object = None

    @property
    def weights(self):
        pp, _ = np.meshgrid(self.phi, self.theta, indexing="ij")
        return np.sin(pp) * self.d_phi * self.d_theta

    def pairs(self):
        """(r, q) pairs that occur, in sorted order."""
        found = set(zip(self.backward.ravel(), self.forward.ravel()))
        return sorted(found)

    def region(self, r, q):
        return (self.backward == r) & (self.forward == q)

    def areas(self):
        w = self.weights
        return {pair: float(np.sum(w[self.region(*pair)])) for pair in self.pairs()}

    def separatrix_fraction(self):
        return float(np.mean(self.separatrix))

    def to_frame(self):
        """One row per cell: indices, centre, limits, region and separatrix flag."""
        n_phi, n_theta = self.forward.shape
        i, j = np.meshgrid(np.arange(n_phi), np.arange(n_theta), indexing="ij")
        pp, tt = np.meshgrid(self.phi, self.theta, indexing="ij")
        backward = self.backward.ravel()
        forward = self.forward.ravel()
        return pd.DataFrame({
            "cell_phi": i.ravel(),
            "cell_theta": j.ravel(),
            "phi": pp.ravel(),
            "theta": tt.ravel(),
            "forward_limit": forward,
            "backward_limit": backward,
            "region": [f"M({r},{q})" for r, q in zip(backward, forward)],
            "separatrix": self.separatrix.ravel(),
        })


@dataclass(frozen=True)
class ModuliIntegrals:
    """Integrals of a two-form per region with |fine - coarse| error estimates."""
    values: dict
    errors: dict = field(default_factory=dict)

    def max_error(self):
        return max(self.errors.values(), default=0.0)


def _classify_grid(scene, grid, threads):
    f = scene.morse_function
    phi, theta, d_phi, d_theta = scene.cell_centers(grid)
    pp, tt = np.meshgrid(phi, theta, indexing="ij")
    xyz = spherical_to_xyz(pp, tt).reshape(-1, 3)
    minima = [cp.id for cp in f.points_of_index(0)]
    maxima = [cp.id for cp in f.points_of_index(2)]

    fwd = trace_limits_parallel(scene, xyz, 1, threads)
    bwd = trace_limits_parallel(scene, xyz, -1, threads)
    flagged = (fwd == SEPARATRIX) | (bwd == SEPARATRIX)
    fraction = float(np.mean(flagged)) if flagged.size else 0.0
    logger.info(f"Classified {flagged.size} cells on grid {grid}: {int(flagged.sum())} separatrix")
    if fraction > SEPARATRIX_LIMIT:
        raise NonTransverseSuspected(
            f"{fraction:.2%} of cells are separatrix cells (limit {SEPARATRIX_LIMIT:.0%}); "
            f"the flow may not be Morse-Smale"
        )
    if flagged.any():
        fwd, bwd = _resolve_flagged(scene, xyz, fwd, bwd, flagged, d_phi, d_theta, threads)

    shape = (len(phi), len(theta))
    forward = np.array(minima, dtype=object)[fwd].reshape(shape)
    backward = np.array(maxima, dtype=object)[bwd].reshape(shape)
    return ModuliDecomposition(scene, phi, theta, d_phi, d_theta, forward, backward,
                               flagged.reshape(shape))


def _resolve_flagged(scene, xyz, fwd, bwd, flagged, d_phi, d_theta, threads):
    """Majority vote over four shifted seeds, then the nearest assigned cell."""
    idx = np.flatnonzero(flagged)
    phi = np.arccos(np.clip(xyz[idx, 2], -1.0, 1.0))
    theta = np.arctan2(xyz[idx, 1], xyz[idx, 0])
    offsets = [(sp * d_phi / 4, st * d_theta / 4) for sp in (1, -1) for st in (1, -1)]
    seeds = np.concatenate([spherical_to_xyz(phi + a, theta + b) for a, b in offsets])
    seed_fwd = trace_limits_parallel(scene, seeds, 1, threads).reshape(4, -1)
    seed_bwd = trace_limits_parallel(scene, seeds, -1, threads).reshape(4, -1)
    fwd = fwd.copy()
    bwd = bwd.copy()
    unresolved = []
    for col, cell in enumerate(idx):
        votes = Counter((int(b), int(f)) for f, b in zip(seed_fwd[:, col], seed_bwd[:, col])
                        if f != SEPARATRIX and b != SEPARATRIX)
        if votes:
            (b, f), _ = votes.most_common(1)[0]
            fwd[cell], bwd[cell] = f, b
        else:
            unresolved.append(cell)
    if unresolved:
        assigned = np.flatnonzero((fwd != SEPARATRIX) & (bwd != SEPARATRIX))
        _, nearest = cKDTree(xyz[assigned]).query(xyz[unresolved])
        fwd[unresolved] = fwd[assigned[nearest]]
        bwd[unresolved] = bwd[assigned[nearest]]
        logger.warning(f"{len(unresolved)} separatrix cells assigned to their nearest neighbour")
    return fwd, bwd


def classify_moduli(scene, threads=None, companion=True):
    """
    Classify every grid cell of ``scene`` by its flow limits.

    Args:
        scene (SurfaceScene): scene to classify
        threads (int): worker threads; defaults to CONEMORSE_THREADS
        companion (bool): also classify the half-resolution grid

    Raises:
        NonTransverseSuspected: more than 1% of cells are separatrix cells
    """
    threads = threads or get_settings().threads
    decomp = _classify_grid(scene, scene.grid, threads)
    if companion:
        n_phi, n_theta = scene.grid
        coarse = _classify_grid(scene, (n_phi // 2, n_theta // 2), threads)
        decomp = ModuliDecomposition(decomp.scene, decomp.phi, decomp.theta, decomp.d_phi,
                                     decomp.d_theta, decomp.forward, decomp.backward,
                                     decomp.separatrix, coarse)
    return decomp


def _region_integrals(decomp, psi):
    pp, tt = np.meshgrid(decomp.phi, decomp.theta, indexing="ij")
    weighted = psi.evaluate(pp, tt) * decomp.weights
    return {pair: float(np.sum(weighted[decomp.region(*pair)])) for pair in decomp.pairs()}


def integrate_over_moduli(decomp, psi):
    """
    Midpoint-rule integrals of ``psi`` over every region, with an error
    estimate from the half-resolution companion grid when available.
    """
    values = _region_integrals(decomp, psi)
    errors = {}
    if decomp.companion is not None:
        coarse = _region_integrals(decomp.companion, psi)
        for pair, value in values.items():
            errors[pair] = abs(value - coarse.get(pair, 0.0))
    return ModuliIntegrals(values, errors)


def absolute_integral(decomp, psi):
    pp, tt = np.meshgrid(decomp.phi, decomp.theta, indexing="ij")
    return float(np.sum(np.abs(psi.evaluate(pp, tt)) * decomp.weights))


def quarter_integral(affine, c, b):
    """Integral of (a0 + ax x + ay y + az z) omega_0 over {sign z = c, sign x = b}."""
    a0, ax, _, az = affine
    return math.pi * a0 + 0.5 * math.pi * (ax * b + az * c)


def analytic_cpsi(family, param):
    """
    c(psi) on the quarter spheres for the round metric and f = x^2 + 2y^2 + 3z^2.

    Rows are p2+, p2-; columns p0+, p0-.
    """
    if family == "s":
        affine = (param, 0.0, 1.0, 0.0)
    elif family == "t":
        affine = (1.0, param, 0.0, param)
    else:
        raise ValueError(f"no closed form for family '{family}'")
    return affine_cpsi(affine)


def affine_cpsi(affine):
    return RealMatrix([[quarter_integral(affine, _sign(r), _sign(q)) for q in COLS] for r in ROWS])


def cpsi_matrix(values):
    """2x2 matrix view of region values keyed by (r, q)."""
    return RealMatrix([[values.get((r, q), 0.0) for q in COLS] for r in ROWS])


def de_rham_r0(psi, n_phi=128, n_theta=256, rtol=R0_RTOL):
    """1 when the integral of psi over S^2 is non-zero, else 0."""
    total = integrate_over_sphere(psi, n_phi, n_theta)
    return int(abs(total) > rtol * 4 * math.pi)


# ---------------------------------------------------------------------------
# flow counts and c(.) for l = 0, 1, 2
# ---------------------------------------------------------------------------

def _branch_signs(scene, curve):
    """(n, sigma) for a saddle branch."""
    if curve.manifold == "unstable":
        return -curve.sign, curve.sign
    e_u, e_s = scene.morse_function.saddle_frames[curve.saddle]
    p = np.array(scene.morse_function.point(curve.saddle).position)
    v = np.cross(np.array(e_u), p)
    n = int(np.sign(np.dot(v, curve.sign * np.array(e_s))))
    return n, -n


def flow_counts(scene, curves=None):
    """Signed counts n(r, q) over every saddle branch."""
    curves = curves if curves is not None else named_flow_curves(scene)
    counts = {}
    for curve in curves.values():
        n, _ = _branch_signs(scene, curve)
        counts[curve.key] = counts.get(curve.key, 0) + n
    return counts


def _critical_points(scene):
    return tuple(CriticalPoint(cp.id, cp.index) for cp in scene.critical_points)


def morse_boundary(scene, curves=None):
    """Morse differential of the scene from its flow lines."""
    data = MorseData(dimension=2, points=_critical_points(scene), flow_counts=flow_counts(scene, curves),
                     psi_closed=False)
    return assemble_boundary(data)


def _chain_map(scene, entries, degree, counts):
    data = MorseData(dimension=2, points=_critical_points(scene), flow_counts=counts,
                     psi_degree=degree, psi_integrals=entries, psi_closed=False)
    return assemble_cpsi(data)


def cpsi_from_function(scene, h, curves=None):
    """c(h) for a function: diagonal with entries h(q)."""
    counts = flow_counts(scene, curves)
    entries = {(cp.id, cp.id): float(h(np.array(cp.position))) for cp in scene.critical_points}
    return _chain_map(scene, entries, 0, counts)


def cpsi_from_one_form(scene, alpha, curves=None):
    """c(alpha): signed line integrals of alpha along the flow lines."""
    curves = curves if curves is not None else named_flow_curves(scene)
    counts = flow_counts(scene, curves)
    entries = {}
    for key, curve in curves.items():
        _, sigma = _branch_signs(scene, curve)
        entries[key] = sigma * line_integral(alpha, curve.points)
    return _chain_map(scene, entries, 1, counts)


def cpsi_from_two_form(decomp, psi, curves=None):
    """c(psi) from region integrals."""
    counts = flow_counts(decomp.scene, curves)
    entries = integrate_over_moduli(decomp, psi).values
    return _chain_map(decomp.scene, entries, 2, counts)


def boundary_terms(r, q):
    """
    Signed flow lines bounding M(r, q) for f = x^2 + 2y^2 + 3z^2, as
    (coefficient, source, target) with the outward orientation.
    """
    c, b = _sign(r), _sign(q)
    terms = []
    for a in (1, -1):
        saddle = "p1+" if a > 0 else "p1-"
        terms.append((-a * b * c, r, saddle))
        terms.append((-a * b * c, saddle, q))
    return terms


BOUNDARY_LISTS = {(r, q): boundary_terms(r, q) for r in ROWS for q in COLS}


def stokes_residuals(decomp, alpha, d_alpha, curves):
    """Per region: (boundary sum of line integrals, integral of d alpha)."""
    integrals = {key: line_integral(alpha, c.points) for key, c in curves.items()}
    regions = integrate_over_moduli(decomp, d_alpha).values
    out = {}
    for pair, terms in BOUNDARY_LISTS.items():
        boundary = sum(coef * integrals[(src, dst)] for coef, src, dst in terms)
        out[pair] = (boundary, regions.get(pair, 0.0))
    return out


@dataclass(frozen=True)
class DeterminantReport:
    """
    c(d alpha) from line integrals and its determinant factorisation.

    The meridian loop runs N -> (0,1,0) -> S -> (0,-1,0) -> N and the
    equator loop in the positive theta direction.
    """
    matrix: RealMatrix
    line_integrals: dict
    meridian: float
    equator: float
    determinant: float

    @property
    def product(self):
        return self.meridian * self.equator

    def to_dict(self):
        return {
            "matrix": self.matrix.to_list(),
            "line_integrals": {f"{s}->{t}": v for (s, t), v in sorted(self.line_integrals.items())},
            "meridian": self.meridian,
            "equator": self.equator,
            "determinant": self.determinant,
            "product": self.product,
        }


def exact_form_cpsi(alpha, scene, curves=None):
    """
    Assemble c(d alpha) from the eight flow-line integrals of alpha.

    Raises:
        CrossCheckFailed: det c(d alpha) differs from meridian * equator
    """
    if not isinstance(scene.morse_function, QuadraticMorseFunction):
        raise ValueError("exact_form_cpsi needs f = x^2 + 2y^2 + 3z^2")
    curves = curves if curves is not None else named_flow_curves(scene)
    ints = {key: line_integral(alpha, c.points) for key, c in curves.items()}
    matrix = RealMatrix([[sum(coef * ints[(src, dst)] for coef, src, dst in BOUNDARY_LISTS[(r, q)])
                          for q in COLS] for r in ROWS])
    meridian = (ints[("p2+", "p1+")] - ints[("p2-", "p1+")]
                + ints[("p2-", "p1-")] - ints[("p2+", "p1-")])
    equator = (ints[("p1-", "p0+")] - ints[("p1+", "p0+")]
               + ints[("p1+", "p0-")] - ints[("p1-", "p0-")])
    m = matrix.values
    det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    report = DeterminantReport(matrix, ints, float(meridian), float(equator), det)
    scale = max(1.0, matrix.max_abs()) ** 2
    if abs(det - report.product) > DET_RTOL * scale:
        raise CrossCheckFailed(f"det {det:.6e} != meridian * equator {report.product:.6e}",
                               report=report)
    return report


def psi_rank_tolerance(matrix, integrals, absolute):
    """max(auto tolerance, largest quadrature error, 1e-8 * integral of |rho|)"""
    return max(auto_tolerance(matrix), integrals.max_error(), 1e-8 * absolute)


def scene_to_morse_data(scene, psi, decomp=None, curves=None, name=None, r0=None):
    """
    MorseData for (scene, psi) with flow counts from the flow lines, psi
    integrals from quadrature and de Rham data b = (1, 0, 1), r = (r0, 0, 0).
    """
    if decomp is None:
        decomp = classify_moduli(scene)
    if curves is None:
        curves = named_flow_curves(scene) if scene.morse_function.saddle_frames else {}
    counts = flow_counts(scene, curves)
    integrals = integrate_over_moduli(decomp, psi)
    matrix = RealMatrix([list(integrals.values.values())]) if integrals.values else RealMatrix.zeros(1, 1)
    tolerance = psi_rank_tolerance(matrix, integrals, absolute_integral(decomp, psi))
    r0 = de_rham_r0(psi) if r0 is None else r0
    data = MorseData(
        dimension=2,
        points=_critical_points(scene),
        flow_counts=counts,
        psi_degree=2,
        psi_integrals=integrals.values,
        psi_closed=True,
        de_rham=DeRhamData((1, 0, 1), (r0, 0, 0)),
        psi_tolerance=tolerance,
        name=name or f"{scene.morse_function.name}:{psi.tag}",
    )
    logger.info(f"Built Morse data '{data.name}' with rank tolerance {tolerance:.3e}")
    return data


def quadratic_flow_counts():
    """Flow counts of the round sphere with f = x^2 + 2y^2 + 3z^2."""
    counts = {}
    for a in (1, -1):
        saddle = "p1+" if a > 0 else "p1-"
        for b in (1, -1):
            counts[(saddle, "p0+" if b > 0 else "p0-")] = -b
        for c in (1, -1):
            counts[("p2+" if c > 0 else "p2-", saddle)] = a * c
    return counts


def analytic_morse_data(psi, name=None):
    """MorseData for the round metric and f = x^2 + 2y^2 + 3z^2 from closed-form integrals."""
    points = tuple(CriticalPoint(cp.id, cp.index) for cp in QuadraticMorseFunction.critical_points)
    integrals = {(r, q): quarter_integral(psi.affine, _sign(r), _sign(q)) for r in ROWS for q in COLS}
    r0 = int(abs(psi.affine[0]) > R0_RTOL)
    return MorseData(
        dimension=2,
        points=points,
        flow_counts=quadratic_flow_counts(),
        psi_degree=2,
        psi_integrals=integrals,
        psi_closed=True,
        de_rham=DeRhamData((1, 0, 1), (r0, 0, 0)),
        name=name or f"quadratic:{psi.tag}:analytic",
    )


def analytic_height_data(psi, name=None):
    """MorseData for the height function: a single region, the whole sphere."""
    total = 4 * math.pi * psi.affine[0]
    r0 = int(abs(psi.affine[0]) > R0_RTOL)
    return MorseData(
        dimension=2,
        points=(CriticalPoint("S", 0), CriticalPoint("N", 2)),
        flow_counts={},
        psi_degree=2,
        psi_integrals={("N", "S"): total},
        psi_closed=True,
        de_rham=DeRhamData((1, 0, 1), (r0, 0, 0)),
        name=name or f"height:{psi.tag}:analytic",
    )
