"""
Morse and cone Morse complexes built from critical-point data.

Conventions
-----------
* C^k has one generator per critical point of index k, in input order.
* The Morse differential is d q = sum_r n(r, q) r over index(r) = index(q) + 1.
* c(psi) q = sum_r (integral of psi over the closure of M(r, q)) r over
  index(r) = index(q) + l.
* For closed psi, d c(psi) = (-1)^l c(psi) d. In general
  d c(psi) + (-1)^(l+1) c(psi) d = -c(d psi).
"""
import logging
from dataclasses import dataclass, field
from types import MappingProxyType

from core.chain_core import (
    ChainMap,
    ChainMorphism,
    CochainComplex,
    GradedVectorSpace,
    cohomology_dims,
    cone,
    induced_rank,
)
from core.errors import (
    BoundaryNotSquareZero,
    InequalityViolated,
    InexactDivision,
    InvalidRanks,
    LeibnizViolation,
    NegativeCoefficient,
    SchemaError,
    ShapeMismatch,
)
from core.linalg_core import RealMatrix, compose, rank
from core.polynomial import MorsePolynomial, morse_q_polynomial, q_polynomial

logger = logging.getLogger(__name__)

LEIBNIZ_RTOL = 1e-8
NUMERIC_LEIBNIZ_RTOL = 1e-4


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    index: int


@dataclass(frozen=True)
class DeRhamData:
    betti: tuple
    psi_ranks: tuple

    def __post_init__(self):
        object.__setattr__(self, "betti", tuple(int(b) for b in self.betti))
        object.__setattr__(self, "psi_ranks", tuple(int(r) for r in self.psi_ranks))


@dataclass(frozen=True, eq=False)
class MorseData:
    """
    Critical points, signed flow counts and integrals of psi over moduli spaces.

    ``flow_counts`` and ``psi_integrals`` are keyed by ``(r, q)`` with r the
    higher-index point. ``psi_tolerance`` is an absolute rank tolerance for
    c(psi) supplied by numeric pipelines; analytic data leaves it unset.
    """
    dimension: int
    points: tuple
    flow_counts: dict = field(default_factory=dict)
    psi_degree: int = 2
    psi_integrals: dict = field(default_factory=dict)
    psi_closed: bool = True
    de_rham: DeRhamData = None
    psi_tolerance: float = None
    name: str = ""

    def __post_init__(self):
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        ids = [p.id for p in points]
        if len(set(ids)) != len(ids):
            raise SchemaError("critical point ids must be unique")
        if self.dimension < 0:
            raise SchemaError("dimension must be non-negative")
        if self.psi_degree < 0:
            raise SchemaError("psi_degree must be non-negative")
        for p in points:
            if not 0 <= p.index <= self.dimension:
                raise SchemaError(f"critical point {p.id} has index {p.index} outside 0..{self.dimension}")
        index = {p.id: p.index for p in points}
        self._check_pairs(self.flow_counts, index, 1, "flow_counts")
        self._check_pairs(self.psi_integrals, index, self.psi_degree, "psi_integrals")
        object.__setattr__(self, "flow_counts",
                           MappingProxyType({k: int(v) for k, v in self.flow_counts.items()}))
        object.__setattr__(self, "psi_integrals",
                           MappingProxyType({k: float(v) for k, v in self.psi_integrals.items()}))
        if self.de_rham is not None:
            size = self.dimension + 1
            if len(self.de_rham.betti) != size or len(self.de_rham.psi_ranks) != size:
                raise SchemaError(f"de_rham lists must have {size} entries")

    @staticmethod
    def _check_pairs(mapping, index, shift, label):
        for (r, q) in mapping:
            if r not in index or q not in index:
                raise SchemaError(f"{label} refers to unknown critical point in ({r}, {q})")
            if index[r] != index[q] + shift:
                raise SchemaError(
                    f"{label} entry ({r}, {q}) joins indices {index[r]} and {index[q]}, "
                    f"expected a difference of {shift}"
                )

    def basis(self, k):
        return [p.id for p in self.points if p.index == k]

    def counts(self):
        return [len(self.basis(k)) for k in range(self.dimension + 1)]

    def graded_space(self):
        return GradedVectorSpace(0, tuple(self.counts()))

    def morse_polynomial(self):
        return MorsePolynomial(tuple(self.counts()), 0)

    def validate(self):
        """Assemble d and c(psi), raising on d o d != 0 or a Leibniz violation."""
        assemble_boundary(self)
        assemble_cpsi(self)
        return self


def _assemble(data, entries, degree, integral):
    space = data.graded_space()
    position = {}
    for k in range(data.dimension + 1):
        for i, pid in enumerate(data.basis(k)):
            position[pid] = (k, i)
    arrays = {k: [[0.0] * space.dim(k) for _ in range(space.dim(k + degree))]
              for k in space.degrees()}
    for (r, q), value in entries.items():
        kr, i = position[r]
        kq, j = position[q]
        arrays[kq][i][j] += value
    blocks = {k: RealMatrix(arrays[k], integral=integral) if arrays[k] else
              RealMatrix.zeros(space.dim(k + degree), space.dim(k), integral=integral)
              for k in space.degrees()}
    return ChainMap(space, space, degree, blocks)


def assemble_boundary(data):
    """Integer-flagged Morse differential; raises BoundaryNotSquareZero if d o d != 0."""
    boundary = _assemble(data, data.flow_counts, 1, integral=True)
    for k in range(data.dimension + 1):
        dd = compose(boundary.block(k + 1), boundary.block(k))
        if not dd.is_zero():
            raise BoundaryNotSquareZero(f"d o d != 0 from degree {k} in dataset '{data.name}'")
    return boundary


def leibniz_tolerance(data, boundary, c_psi):
    scale = max(1.0, boundary.max_abs() * c_psi.max_abs() * max(data.counts() or [1]))
    if data.psi_tolerance is None:
        return LEIBNIZ_RTOL * scale
    return max(NUMERIC_LEIBNIZ_RTOL * scale, 10.0 * data.psi_tolerance)


def assemble_cpsi(data):
    """
    c(psi) as a degree-l chain map.

    Raises:
        LeibnizViolation: psi is flagged closed but d c(psi) != (-1)^l c(psi) d
    """
    c_psi = _assemble(data, data.psi_integrals, data.psi_degree, integral=False)
    if data.psi_closed:
        boundary = assemble_boundary(data)
        residual = closed_residual(boundary, c_psi, data.psi_degree)
        if residual > leibniz_tolerance(data, boundary, c_psi):
            raise LeibnizViolation(
                f"d c(psi) - (-1)^l c(psi) d has size {residual:.3e} in dataset '{data.name}'"
            )
    return c_psi


def closed_residual(partial, c_psi, ell):
    return leibniz_residual(partial, c_psi, None, ell)


def leibniz_residual(partial, c_psi, c_dpsi, ell):
    """
    max over degrees of max|d c(psi) + (-1)^(l+1) c(psi) d + c(d psi)|.

    ``c_dpsi`` may be None for a closed form.
    """
    if partial.degree != 1 or c_psi.degree != ell:
        raise ShapeMismatch("expected a degree-1 boundary and a degree-l c(psi)")
    if c_psi.source != partial.source or c_psi.target != partial.target:
        raise ShapeMismatch("c(psi) and the boundary live on different spaces")
    if c_dpsi is not None and (c_dpsi.degree != ell + 1 or c_dpsi.source != partial.source):
        raise ShapeMismatch("c(d psi) must be a degree l+1 map on the same space")
    sign = (-1) ** (ell + 1)
    worst = 0.0
    for n in partial.degrees():
        total = compose(partial.block(n + ell), c_psi.block(n))
        total = total + compose(c_psi.block(n + 1), partial.block(n)).scaled(sign)
        if c_dpsi is not None:
            total = total + c_dpsi.block(n)
        worst = max(worst, total.max_abs())
    return worst


def morse_complex(data):
    return CochainComplex(data.graded_space(), assemble_boundary(data), tolerance=None)


def cpsi_morphism(data):
    """c(psi) as a graded chain morphism of the Morse complex into itself."""
    boundary = assemble_boundary(data)
    c_psi = assemble_cpsi(data)
    cx = CochainComplex(data.graded_space(), boundary)
    scale = max(1.0, c_psi.max_abs() * boundary.max_abs())
    rtol = leibniz_tolerance(data, boundary, c_psi) / scale
    return ChainMorphism(cx, cx, c_psi, graded=True, commutation_rtol=rtol,
                         tolerance=data.psi_tolerance)


def cone_morse_complex(data):
    """Cone(c(psi)) on the Morse complex; psi must be closed."""
    if not data.psi_closed:
        raise LeibnizViolation("the cone Morse complex needs a closed form (psi_closed=false)")
    return cone(cpsi_morphism(data))


def report_range(dimension, ell):
    """Degrees carrying the cone complex: 0..dim+l-1 for l >= 1."""
    return min(0, ell - 1), dimension + max(0, ell - 1)


def bpsi_from_de_rham(betti, psi_ranks, ell):
    """
    b^psi_k = b_k - r_(k-l) + b_(k-l+1) - r_(k-l+1)

    Raises:
        InvalidRanks: some r_k exceeds b_k or b_(k+l), or is negative
    """
    betti = [int(b) for b in betti]
    ranks = [int(r) for r in psi_ranks]
    if len(betti) != len(ranks):
        raise InvalidRanks("betti and psi_ranks must have the same length")
    dim = len(betti) - 1

    def b(k):
        return betti[k] if 0 <= k <= dim else 0

    def r(k):
        return ranks[k] if 0 <= k <= dim else 0

    for k in range(dim + 1):
        if r(k) < 0 or r(k) > b(k) or r(k) > b(k + ell):
            raise InvalidRanks(f"r_{k} = {r(k)} must lie in 0..min(b_{k}, b_{k + ell})")
    lo, hi = report_range(dim, ell)
    return MorsePolynomial(
        tuple(b(k) - r(k - ell) + b(k - ell + 1) - r(k - ell + 1) for k in range(lo, hi + 1)), lo
    )


# statement each record checks; failures cite it
SOURCES = {
    "weak cone Morse inequality": "cone-morse/weak",
    "strong cone Morse inequality": "cone-morse/strong",
    "cone Euler characteristic": "cone-morse/euler",
    "weak Morse inequality": "morse/weak",
    "strong Morse inequality": "morse/strong",
    "Morse cohomology matches de Rham": "morse/de-rham",
    "cone Morse cohomology matches de Rham": "cone-morse/quasi-isomorphism",
    "cup rank at most cone rank": "cone-morse/cup-rank",
    "cup rank equals induced rank on Morse cohomology": "cone-morse/cup-rank",
    "cone lower bound": "cone-morse/two-sided-bounds",
    "cone upper bound from cup rank": "cone-morse/two-sided-bounds",
    "cone rank deviation bound": "cone-morse/rank-deviation",
    "strong cone rank deviation bound": "cone-morse/rank-deviation",
    "rank gap is non-negative": "cone-morse/surface-rank-gap",
    "rank gap bounded by excess critical points": "cone-morse/surface-rank-gap",
    "exact form Morse bound": "cone-morse/exact-form",
    "perfect Morse function: cone rank equals cup rank": "cone-morse/perfect",
    "perfect Morse function: weak equality": "cone-morse/perfect",
    "perfect Morse function: strong equality": "cone-morse/perfect",
}


@dataclass(frozen=True)
class InequalityRecord:
    name: str
    degree: object
    lhs: int
    rhs: int
    relation: str = "<="

    @property
    def source(self):
        return SOURCES[self.name]

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        if self.relation == "==":
            return self.slack == 0
        return self.slack >= 0

    def to_dict(self):
        return {"name": self.name, "source": self.source, "degree": self.degree,
                "lhs": self.lhs, "rhs": self.rhs, "relation": self.relation,
                "slack": self.slack, "holds": self.holds}


@dataclass(frozen=True)
class ConeMorseReport:
    name: str
    dimension: int
    ell: int
    degree_range: tuple
    m: MorsePolynomial
    v: MorsePolynomial
    b_psi: MorsePolynomial
    r: MorsePolynomial = None
    morse_betti: MorsePolynomial = None
    cone_dims: MorsePolynomial = None
    induced_ranks: MorsePolynomial = None
    weak_bounds: tuple = ()
    strong_bounds: tuple = ()
    checks: tuple = ()
    q_certificate: MorsePolynomial = None
    q_failure: str = None
    perfect: bool = False
    uncertain_degrees: tuple = ()
    b_psi_source: str = "de Rham"

    def records(self):
        return tuple(self.weak_bounds) + tuple(self.strong_bounds) + tuple(self.checks)

    def violations(self):
        return [rec for rec in self.records() if not rec.holds]

    @property
    def passed(self):
        return not self.violations() and self.q_failure is None

    def to_dict(self):
        lo, hi = self.degree_range

        def dense(p):
            return None if p is None else p.dense(lo, hi)

        return {
            "name": self.name,
            "dimension": self.dimension,
            "psi_degree": self.ell,
            "degrees": list(range(lo, hi + 1)),
            "m": dense(self.m),
            "v": dense(self.v),
            "b_psi": dense(self.b_psi),
            "b_psi_source": self.b_psi_source,
            "r": dense(self.r),
            "morse_betti": dense(self.morse_betti),
            "cone_cohomology": dense(self.cone_dims),
            "induced_ranks": dense(self.induced_ranks),
            "perfect": self.perfect,
            "uncertain_v_degrees": list(self.uncertain_degrees),
            "q_certificate": None if self.q_certificate is None else
            {"min_degree": self.q_certificate.min_degree,
             "coefficients": list(self.q_certificate.coefficients)},
            "q_failure": self.q_failure,
            "weak_bounds": [rec.to_dict() for rec in self.weak_bounds],
            "strong_bounds": [rec.to_dict() for rec in self.strong_bounds],
            "checks": [rec.to_dict() for rec in self.checks],
            "passed": self.passed,
        }

    def to_rows(self):
        """Flat rows for tabular output."""
        return [dict(rec.to_dict(), dataset=self.name) for rec in self.records()]


def _alternating(values, lo, j):
    return sum((-1) ** (j - k) * values(k) for k in range(lo, j + 1))


def inequality_report(data, raise_on_violation=True):
    """
    Evaluate every cone Morse inequality on ``data``.

    Raises:
        InequalityViolated: a recorded inequality or the Q(t) certificate failed
        SchemaError: psi is not closed and there is no de Rham data to fix b^psi
    """
    ell = data.psi_degree
    dim = data.dimension
    lo, hi = report_range(dim, ell)
    boundary = assemble_boundary(data)
    c_psi = assemble_cpsi(data)

    m = data.morse_polynomial()
    v_values = []
    uncertain = []
    for k in range(dim + 1):
        block = c_psi.block(k)
        if block.rows == 0 or block.cols == 0:
            v_values.append(0)
            continue
        report = rank(block, data.psi_tolerance)
        if report.uncertain:
            uncertain.append(k)
            logger.warning(f"{data.name}: v_{k} = {report.rank} is uncertain "
                           f"(pivot gap {report.gap_decades:.1f} decades)")
        v_values.append(report.rank)
    v = MorsePolynomial(tuple(v_values), 0)

    morse_cx = CochainComplex(data.graded_space(), boundary)
    morse_betti = cohomology_dims(morse_cx).as_polynomial()

    cone_dims = None
    induced = None
    if data.psi_closed:
        phi = cpsi_morphism(data)
        cone_dims = cohomology_dims(cone(phi)).as_polynomial()
        induced = MorsePolynomial(tuple(induced_rank(phi, k) for k in range(dim + 1)), 0)

    if data.de_rham is not None:
        betti = MorsePolynomial(data.de_rham.betti, 0)
        r = MorsePolynomial(data.de_rham.psi_ranks, 0)
        b_psi = bpsi_from_de_rham(data.de_rham.betti, data.de_rham.psi_ranks, ell)
        source = "de Rham"
    elif cone_dims is None:
        raise SchemaError(f"{data.name}: b^psi is undetermined without de Rham data "
                          f"when psi_closed is false")
    else:
        logger.warning(f"{data.name}: no de Rham data, using Morse-side cone cohomology for b^psi")
        betti = morse_betti
        r = None
        b_psi = cone_dims
        source = "Morse"

    def rhs_weak(k):
        return m[k] - v[k - ell] + m[k - ell + 1] - v[k - ell + 1]

    weak = [InequalityRecord("weak cone Morse inequality", k, b_psi[k], rhs_weak(k))
            for k in range(lo, hi + 1)]
    strong = [InequalityRecord("strong cone Morse inequality", j,
                               _alternating(b_psi.coefficient, lo, j),
                               _alternating(rhs_weak, lo, j))
              for j in range(lo, hi + 1)]

    checks = []
    for k in range(dim + 1):
        checks.append(InequalityRecord("weak Morse inequality", k, betti[k], m[k]))
    for j in range(dim + 1):
        checks.append(InequalityRecord("strong Morse inequality", j,
                                       _alternating(betti.coefficient, 0, j),
                                       _alternating(m.coefficient, 0, j)))
    euler = sum((-1) ** k * b_psi[k] for k in range(lo, hi + 1))
    euler_rhs = sum((-1) ** k * rhs_weak(k) for k in range(lo, hi + 1))
    checks.append(InequalityRecord("cone Euler characteristic", None, euler, euler_rhs, "=="))

    if cone_dims is not None and data.de_rham is not None:
        for k in range(lo, hi + 1):
            checks.append(InequalityRecord("cone Morse cohomology matches de Rham", k,
                                           cone_dims[k], b_psi[k], "=="))
        for k in range(dim + 1):
            checks.append(InequalityRecord("Morse cohomology matches de Rham", k,
                                           morse_betti[k], betti[k], "=="))

    if r is not None:
        for k in range(dim + 1):
            checks.append(InequalityRecord("cup rank at most cone rank", k, r[k], v[k]))
        if induced is not None:
            for k in range(dim + 1):
                checks.append(InequalityRecord("cup rank equals induced rank on Morse cohomology",
                                               k, induced[k], r[k], "=="))
        for k in range(lo, hi + 1):
            lower = betti[k] - v[k - ell] + betti[k - ell + 1] - v[k - ell + 1]
            upper = m[k] - r[k - ell] + m[k - ell + 1] - r[k - ell + 1]
            checks.append(InequalityRecord("cone lower bound", k, lower, b_psi[k]))
            checks.append(InequalityRecord("cone upper bound from cup rank", k, b_psi[k], upper))

        def excess(k):
            return (v[k - ell] - r[k - ell]) + (v[k - ell + 1] - r[k - ell + 1])

        def deficit(k):
            return (m[k] - betti[k]) + (m[k - ell + 1] - betti[k - ell + 1])

        for k in range(lo, hi + 1):
            checks.append(InequalityRecord("cone rank deviation bound", k, excess(k), deficit(k)))
            checks.append(InequalityRecord("strong cone rank deviation bound", k,
                                           _alternating(excess, lo, k), _alternating(deficit, lo, k)))
        if ell == 2:
            for k in range(dim):
                checks.append(InequalityRecord("rank gap is non-negative", k, 0, v[k] - r[k]))
                checks.append(InequalityRecord("rank gap bounded by excess critical points", k,
                                               v[k] - r[k], m[k + 1] - betti[k + 1]))
            if all(x == 0 for x in data.de_rham.psi_ranks):
                for k in range(1, dim + 1):
                    checks.append(InequalityRecord("exact form Morse bound", k, betti[k],
                                                   m[k] - v[k - 1]))

    perfect = all(m[k] == betti[k] for k in range(dim + 1))
    if perfect and r is not None:
        for k in range(dim + 1):
            checks.append(InequalityRecord("perfect Morse function: cone rank equals cup rank",
                                           k, v[k], r[k], "=="))
        for k in range(lo, hi + 1):
            checks.append(InequalityRecord("perfect Morse function: weak equality", k,
                                           b_psi[k], rhs_weak(k), "=="))
            checks.append(InequalityRecord("perfect Morse function: strong equality", k,
                                           _alternating(b_psi.coefficient, lo, k),
                                           _alternating(rhs_weak, lo, k), "=="))

    q_cert = None
    q_failure = None
    try:
        q_cert = q_polynomial(m, v, b_psi, ell)
        morse_q_polynomial(m, betti)
    except (InexactDivision, NegativeCoefficient) as e:
        q_failure = str(e)
        logger.error(f"{data.name}: Morse polynomial certificate failed: {e}")

    report = ConeMorseReport(
        name=data.name,
        dimension=dim,
        ell=ell,
        degree_range=(lo, hi),
        m=m,
        v=v,
        b_psi=b_psi,
        r=r,
        morse_betti=morse_betti,
        cone_dims=cone_dims,
        induced_ranks=induced,
        weak_bounds=tuple(weak),
        strong_bounds=tuple(strong),
        checks=tuple(checks),
        q_certificate=q_cert,
        q_failure=q_failure,
        perfect=perfect,
        uncertain_degrees=tuple(uncertain),
        b_psi_source=source,
    )
    if raise_on_violation and not report.passed:
        names = sorted({rec.name for rec in report.violations()})
        raise InequalityViolated(f"{data.name}: violated {names or ['Q(t) certificate']}",
                                 report=report)
    return report
