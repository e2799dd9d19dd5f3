"""
Finite real cochain complexes, degree-l chain maps and the complexes derived
from a chain map: cone, kernel, image and cokernel.

Cohomology is computed by rank-nullity. Maps induced on cohomology are
expressed in harmonic bases, i.e. orthonormal bases of ker d_n orthogonal to
im d_{n-1}.
"""
import logging
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np
import scipy.linalg

from core.errors import DegenerateSystem, NotAChainMap, NotAComplex, ShapeMismatch
from core.linalg_core import (
    RealMatrix,
    auto_tolerance,
    block_matrix,
    column_basis,
    complement_basis,
    compose,
    compose_all,
    kernel_basis,
    rank,
)
from core.polynomial import MorsePolynomial, q_polynomial  # noqa: F401  (re-exported)

logger = logging.getLogger(__name__)

# relative tolerance for rank decisions on float data derived by projections
DERIVED_RTOL = 1e-9
SQUARE_ZERO_RTOL = 1e-10
COMMUTATION_RTOL = 1e-9
RESAMPLE_LIMIT = 10


def derived_tolerance(m, tol=None):
    """Rank tolerance used throughout this module when the caller gives none."""
    if tol is not None:
        return tol
    if m.integral:
        return None
    return max(auto_tolerance(m), DERIVED_RTOL * m.max_abs()) or None


def rank_of(m, tol=None):
    return rank(m, derived_tolerance(m, tol)).rank


@dataclass(frozen=True)
class GradedVectorSpace:
    """Dimensions per integer degree; zero outside ``min_degree .. max_degree``."""
    min_degree: int = 0
    dims: tuple = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 0 for d in dims):
            raise ValueError(f"negative dimension in {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "min_degree", int(self.min_degree))

    @classmethod
    def from_dict(cls, dims_by_degree):
        if not dims_by_degree:
            return cls()
        lo, hi = min(dims_by_degree), max(dims_by_degree)
        return cls(lo, tuple(dims_by_degree.get(n, 0) for n in range(lo, hi + 1)))

    @property
    def max_degree(self):
        return self.min_degree + len(self.dims) - 1

    def degrees(self):
        return range(self.min_degree, self.max_degree + 1)

    def dim(self, n):
        i = n - self.min_degree
        if 0 <= i < len(self.dims):
            return self.dims[i]
        return 0

    def total_dim(self):
        return sum(self.dims)

    def euler_characteristic(self):
        return sum((-1) ** n * self.dim(n) for n in self.degrees())

    def dense(self, lo, hi):
        return [self.dim(n) for n in range(lo, hi + 1)]

    def as_polynomial(self):
        return MorsePolynomial(self.dims, self.min_degree)

    def is_zero(self):
        return self.total_dim() == 0


@dataclass(frozen=True, eq=False)
class ChainMap:
    """
    Degree-``degree`` linear map between graded spaces.

    ``blocks[n]`` has shape ``target.dim(n + degree) x source.dim(n)``;
    missing blocks are zero.
    """
    source: GradedVectorSpace
    target: GradedVectorSpace
    degree: int
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        checked = {}
        for n, block in self.blocks.items():
            expected = (self.target.dim(n + self.degree), self.source.dim(n))
            if block.shape != expected:
                raise ShapeMismatch(
                    f"block at degree {n} has shape {block.shape}, expected {expected}"
                )
            if block.rows and block.cols:
                checked[int(n)] = block
        object.__setattr__(self, "blocks", MappingProxyType(checked))

    @classmethod
    def zero(cls, source, target, degree):
        return cls(source, target, degree, {})

    @classmethod
    def identity(cls, space):
        return cls(space, space, 0, {n: RealMatrix.identity(space.dim(n)) for n in space.degrees()})

    def block(self, n):
        found = self.blocks.get(n)
        if found is not None:
            return found
        return RealMatrix.zeros(self.target.dim(n + self.degree), self.source.dim(n))

    def degrees(self):
        return self.source.degrees()

    def is_integral(self):
        return all(b.integral for b in self.blocks.values())

    def max_abs(self):
        return max((b.max_abs() for b in self.blocks.values()), default=0.0)

    def after(self, other):
        """self o other"""
        if other.target != self.source:
            raise ShapeMismatch("composition of chain maps with mismatched spaces")
        blocks = {n: compose(self.block(n + other.degree), other.block(n)) for n in other.degrees()}
        return ChainMap(other.source, self.target, self.degree + other.degree, blocks)

    def scaled(self, factor):
        return ChainMap(self.source, self.target, self.degree,
                        {n: b.scaled(factor) for n, b in self.blocks.items()})

    def __neg__(self):
        return self.scaled(-1)

    def __add__(self, other):
        self._check_compatible(other)
        degrees = set(self.blocks) | set(other.blocks)
        return ChainMap(self.source, self.target, self.degree,
                        {n: self.block(n) + other.block(n) for n in degrees})

    def __sub__(self, other):
        return self + (-other)

    def _check_compatible(self, other):
        if (self.source, self.target, self.degree) != (other.source, other.target, other.degree):
            raise ShapeMismatch("chain maps live between different spaces or degrees")


@dataclass(frozen=True, eq=False)
class CochainComplex:
    """
    A graded space with a degree +1 differential squaring to zero.

    Args:
        space: graded dimensions
        differential: degree +1 ChainMap on ``space``
        basis: optional embedding of each degree into an ambient space
            (columns), recorded by the kernel, image and cokernel complexes
        tolerance: absolute rank tolerance for this complex, or None
        square_rtol: relative bound on ``max|d o d|`` against ``max|d|**2``
    """
    space: GradedVectorSpace
    differential: ChainMap
    basis: dict = None
    tolerance: float = None
    square_rtol: float = SQUARE_ZERO_RTOL

    def __post_init__(self):
        d = self.differential
        if d.degree != 1 or d.source != self.space or d.target != self.space:
            raise ShapeMismatch("differential must be a degree +1 map of the complex's space")
        scale = d.max_abs() ** 2
        for n in self.space.degrees():
            dd = compose(d.block(n + 1), d.block(n))
            if d.is_integral():
                bad = not dd.is_zero()
            else:
                bad = dd.max_abs() > self.square_rtol * max(scale, 1e-300)
            if bad:
                raise NotAComplex(f"d o d != 0 at degree {n} (max |dd| = {dd.max_abs():.3e})")
        if self.basis is not None:
            object.__setattr__(self, "basis", MappingProxyType(dict(self.basis)))

    @classmethod
    def with_zero_differential(cls, space):
        return cls(space, ChainMap.zero(space, space, 1))

    @classmethod
    def from_blocks(cls, space, blocks, **kwargs):
        return cls(space, ChainMap(space, space, 1, blocks), **kwargs)

    def d(self, n):
        return self.differential.block(n)

    def degrees(self):
        return self.space.degrees()

    def negated(self):
        return replace(self, differential=-self.differential)

    def rank_d(self, n):
        return rank_of(self.d(n), self.tolerance)


@dataclass(frozen=True, eq=False)
class ChainMorphism:
    """
    A degree-l chain map ``map: source -> target`` between complexes.

    With ``graded=False`` the map satisfies phi d_B = d_A phi. With
    ``graded=True`` it satisfies phi d_B = (-1)^l d_A phi, the relation of
    wedge products and of c(psi).
    """
    source: CochainComplex
    target: CochainComplex
    map: ChainMap
    graded: bool = False
    commutation_rtol: float = COMMUTATION_RTOL
    tolerance: float = None
    degenerate: bool = False

    def __post_init__(self):
        if self.map.source != self.source.space or self.map.target != self.target.space:
            raise ShapeMismatch("chain map spaces do not match the complexes")
        residual = self.commutation_residual()
        scale = max(1.0, self.map.max_abs() * max(self.source.differential.max_abs(),
                                                   self.target.differential.max_abs()))
        if residual > self.commutation_rtol * scale:
            raise NotAChainMap(f"commutation residual {residual:.3e} exceeds tolerance")

    @property
    def degree(self):
        return self.map.degree

    def commutation_residual(self):
        sign = (-1) ** self.degree if self.graded else 1
        worst = 0.0
        for n in self.map.degrees():
            lhs = compose(self.map.block(n + 1), self.source.d(n))
            rhs = compose(self.target.d(n + self.degree), self.map.block(n)).scaled(sign)
            worst = max(worst, (lhs - rhs).max_abs())
        return worst

    def strict(self):
        """Equivalent morphism satisfying phi d_B = d_A phi."""
        if not self.graded:
            return self
        source = self.source if self.degree % 2 == 0 else self.source.negated()
        return replace(self, source=source, graded=False)

    def block(self, n):
        return self.map.block(n)

    def rank_tolerance(self):
        return self.tolerance


@dataclass(frozen=True)
class CheckReport:
    """Per-degree comparison of two independently computed quantities."""
    name: str
    passed: bool
    rows: tuple = ()

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "rows": [dict(r) for r in self.rows]}


def _report(name, rows):
    rows = tuple(rows)
    return CheckReport(name=name, passed=all(r["holds"] for r in rows), rows=rows)


# ---------------------------------------------------------------------------
# cone and cohomology
# ---------------------------------------------------------------------------

def _cone_range(target_space, source_space, ell):
    spans = []
    if target_space.dims:
        spans.append((target_space.min_degree, target_space.max_degree))
    if source_space.dims:
        spans.append((source_space.min_degree + ell - 1, source_space.max_degree + ell - 1))
    if not spans:
        return 0, -1
    return min(lo for lo, _ in spans), max(hi for _, hi in spans)


def cone(phi):
    """
    Mapping cone of a chain morphism ``phi: B -> A`` of degree l.

    Cone^n = A^n (+) B^(n-l+1) with differential (d_A, phi; 0, -d_B).
    A graded morphism is first made strict, which turns the second
    diagonal block into (-1)^(l-1) d_B.
    """
    strict = phi.strict()
    a_cx, b_cx, ell = strict.target, strict.source, strict.degree
    a, b = a_cx.space, b_cx.space
    lo, hi = _cone_range(a, b, ell)
    space = GradedVectorSpace(lo, tuple(a.dim(n) + b.dim(n - ell + 1) for n in range(lo, hi + 1)))
    blocks = {}
    for n in space.degrees():
        k = n - ell + 1
        blocks[n] = block_matrix([
            [a_cx.d(n), strict.block(k)],
            [RealMatrix.zeros(b.dim(k + 1), a.dim(n)), -b_cx.d(k)],
        ])
    tolerances = [t for t in (phi.tolerance, a_cx.tolerance, b_cx.tolerance) if t is not None]
    return CochainComplex.from_blocks(
        space,
        blocks,
        tolerance=max(tolerances) if tolerances else None,
        square_rtol=max(SQUARE_ZERO_RTOL, phi.commutation_rtol),
    )


def cohomology_dims(c):
    """dim H^n = dims[n] - rank d_n - rank d_(n-1)"""
    ranks = {n: c.rank_d(n) for n in range(c.space.min_degree - 1, c.space.max_degree + 1)}
    return GradedVectorSpace(
        c.space.min_degree,
        tuple(c.space.dim(n) - ranks[n] - ranks[n - 1] for n in c.degrees()),
    )


def harmonic_basis(c, n):
    """Orthonormal basis of ker d_n orthogonal to im d_(n-1)."""
    kernel = kernel_basis(c.d(n), derived_tolerance(c.d(n), c.tolerance))
    image = column_basis(c.d(n - 1), derived_tolerance(c.d(n - 1), c.tolerance))
    count = kernel.cols - image.cols
    if count <= 0:
        return RealMatrix(np.zeros((c.space.dim(n), 0)))
    if image.cols == 0:
        return kernel
    projected = kernel.values - image.values @ (image.values.T @ kernel.values)
    q, _, _ = scipy.linalg.qr(projected, pivoting=True)
    return RealMatrix(q[:, :count])


def induced_map(phi, n):
    """Matrix of [phi]: H^n(B) -> H^(n+l)(A) in harmonic bases."""
    strict = phi.strict()
    h_b = harmonic_basis(strict.source, n)
    h_a = harmonic_basis(strict.target, n + strict.degree)
    return compose_all(h_a.T, strict.block(n), h_b)


def induced_rank(phi, n):
    m = induced_map(phi, n)
    if m.rows == 0 or m.cols == 0:
        return 0
    return rank_of(m, phi.tolerance)


# ---------------------------------------------------------------------------
# kernel, image and cokernel complexes
# ---------------------------------------------------------------------------

def _phi_tol(phi, block):
    return derived_tolerance(block, phi.tolerance)


def kernel_complex(phi):
    """Kernel complex: ker phi_n with d_B restricted and written in the kernel basis."""
    b_cx = phi.source
    bases = {n: kernel_basis(phi.block(n), _phi_tol(phi, phi.block(n))) for n in b_cx.degrees()}
    return _subcomplex(b_cx, bases, phi.tolerance)


def image_complex(phi):
    """Image complex: im phi_(n-l) inside A^n with d_A restricted."""
    a_cx, ell = phi.target, phi.degree
    bases = {n: column_basis(phi.block(n - ell), _phi_tol(phi, phi.block(n - ell)))
             for n in a_cx.degrees()}
    return _subcomplex(a_cx, bases, phi.tolerance)


def cokernel_complex(phi):
    """
    Cokernel complex realised as the orthogonal complement of im phi_(n-l)
    in A^n, with differential pi o d_A in that basis.
    """
    a_cx, ell = phi.target, phi.degree
    bases = {}
    for n in a_cx.degrees():
        image = column_basis(phi.block(n - ell), _phi_tol(phi, phi.block(n - ell)))
        bases[n] = complement_basis(image, a_cx.space.dim(n))
    return _subcomplex(a_cx, bases, phi.tolerance)


def _subcomplex(ambient, bases, tolerance):
    degrees = list(ambient.degrees())
    if not degrees:
        return CochainComplex.with_zero_differential(GradedVectorSpace())
    space = GradedVectorSpace(degrees[0], tuple(bases[n].cols for n in degrees))
    blocks = {}
    for n in degrees[:-1]:
        blocks[n] = compose_all(bases[n + 1].T, ambient.d(n), bases[n])
    # projected differentials are float data even when the ambient is integral
    return CochainComplex.from_blocks(space, blocks, basis=bases, tolerance=tolerance,
                                      square_rtol=1e-8)


def _basis(cx, n):
    if cx.basis is not None and n in cx.basis:
        return cx.basis[n]
    return RealMatrix(np.zeros((0, 0)))


def image_inclusion(phi):
    """The inclusion im(phi) -> A as a degree-0 chain morphism."""
    image = image_complex(phi)
    blocks = {n: _basis(image, n) for n in image.degrees()}
    incl = ChainMap(image.space, phi.target.space, 0, blocks)
    return ChainMorphism(image, phi.target, incl, commutation_rtol=1e-8, tolerance=phi.tolerance)


# ---------------------------------------------------------------------------
# mapping-cone identity checks
# ---------------------------------------------------------------------------

def splitting_check(phi):
    """
    dim H^n(Cone phi) == dim coker([phi] on H^(n-l)) + dim ker([phi] on H^(n-l+1)).
    """
    strict = phi.strict()
    ell = strict.degree
    h_cone = cohomology_dims(cone(strict))
    h_a = cohomology_dims(strict.target)
    h_b = cohomology_dims(strict.source)
    rows = []
    for n in h_cone.degrees():
        coker = h_a.dim(n) - induced_rank(strict, n - ell)
        ker = h_b.dim(n - ell + 1) - induced_rank(strict, n - ell + 1)
        rows.append({"degree": n, "lhs": h_cone.dim(n), "rhs": coker + ker,
                     "holds": h_cone.dim(n) == coker + ker})
    return _report("cone cohomology splitting", rows)


def cokernel_splitting_check(phi):
    """dim H^n(coker phi) == coker(H^n(im) -> H^n(A)) + ker(H^(n+1)(im) -> H^(n+1)(A))."""
    incl = image_inclusion(phi.strict())
    h_q = cohomology_dims(cokernel_complex(phi.strict()))
    h_a = cohomology_dims(incl.target)
    h_im = cohomology_dims(incl.source)
    rows = []
    for n in h_q.degrees():
        rhs = (h_a.dim(n) - induced_rank(incl, n)) + (h_im.dim(n + 1) - induced_rank(incl, n + 1))
        rows.append({"degree": n, "lhs": h_q.dim(n), "rhs": rhs, "holds": h_q.dim(n) == rhs})
    return _report("cokernel cohomology splitting", rows)


def cokernel_cone_iso_check(phi):
    """dim H^n(cone of im(phi) -> A) == dim H^n(coker phi) for every n."""
    strict = phi.strict()
    h_cone = cohomology_dims(cone(image_inclusion(strict)))
    h_q = cohomology_dims(cokernel_complex(strict))
    lo = min(h_cone.min_degree, h_q.min_degree)
    hi = max(h_cone.max_degree, h_q.max_degree)
    rows = [{"degree": n, "lhs": h_cone.dim(n), "rhs": h_q.dim(n),
             "holds": h_cone.dim(n) == h_q.dim(n)} for n in range(lo, hi + 1)]
    return _report("image cone computes cokernel cohomology", rows)


def euler_check(phi):
    c = cone(phi)
    lhs = c.space.euler_characteristic()
    rhs = cohomology_dims(c).euler_characteristic()
    return _report("cone Euler characteristic", [{"degree": None, "lhs": lhs, "rhs": rhs,
                                                  "holds": lhs == rhs}])


def _induced(target_cx, chain_matrix, source_cx, n_target, n_source):
    h_t = harmonic_basis(target_cx, n_target)
    h_s = harmonic_basis(source_cx, n_source)
    return compose_all(h_t.T, chain_matrix, h_s)


def _rank_or_zero(m, tol):
    if m.rows == 0 or m.cols == 0:
        return 0
    return rank_of(m, tol)


def les_exactness_check(phi):
    """
    Exactness of
        H^(n-l+1)(ker) --i2--> H^n(Cone) --pi1 o phi2--> H^n(coker) --delta'--> H^(n-l+2)(ker)

    i2(b) = (0, b), pi1 o phi2 (a, b) = projection of a to the complement of
    im phi, and the connecting map is

        delta'[q] = [ d_B phi^+ d_A q ]

    where phi^+ solves phi b = d_A q in the least-squares sense; d_A q lies
    in im phi because q is closed in the cokernel complex.
    """
    strict = phi.strict()
    ell = strict.degree
    a_cx, b_cx = strict.target, strict.source
    a, b = a_cx.space, b_cx.space
    c_cx = cone(strict)
    k_cx = kernel_complex(strict)
    q_cx = cokernel_complex(strict)
    tol = strict.tolerance

    lo, hi = _cone_range(a, b, ell)
    lo, hi = lo - 1, hi + 1

    def iota(n):
        k = n - ell + 1
        kb = _basis(k_cx, k)
        top = np.zeros((a.dim(n), k_cx.space.dim(k)))
        bottom = kb.values if kb.cols else np.zeros((b.dim(k), k_cx.space.dim(k)))
        chain = RealMatrix(np.vstack([top, bottom]))
        return _induced(c_cx, chain, k_cx, n, k)

    def project(n):
        k = n - ell + 1
        pb = _basis(q_cx, n)
        left = pb.values.T if pb.cols else np.zeros((q_cx.space.dim(n), a.dim(n)))
        chain = RealMatrix(np.hstack([left, np.zeros((q_cx.space.dim(n), b.dim(k)))]))
        return _induced(q_cx, chain, c_cx, n, n)

    def connecting(n):
        k = n - ell + 1
        h_q = harmonic_basis(q_cx, n)
        h_k = harmonic_basis(k_cx, k + 1)
        if h_q.cols == 0 or h_k.cols == 0:
            return RealMatrix(np.zeros((h_k.cols, h_q.cols)))
        lifted = compose(_basis(q_cx, n), h_q)
        rhs = compose(a_cx.d(n), lifted)
        phi_block = strict.block(k)
        if phi_block.rows == 0 or phi_block.cols == 0:
            solution = np.zeros((b.dim(k), h_q.cols))
        else:
            solution = scipy.linalg.lstsq(phi_block.values, rhs.values)[0]
        boundary = compose(b_cx.d(k), RealMatrix(solution))
        return compose_all(h_k.T, _basis(k_cx, k + 1).T, boundary)

    def dim_h(cx, n):
        return harmonic_basis(cx, n).cols

    ranks_f = {n: _rank_or_zero(iota(n), tol) for n in range(lo - 1, hi + 2)}
    ranks_g = {n: _rank_or_zero(project(n), tol) for n in range(lo - 1, hi + 2)}
    ranks_h = {n: _rank_or_zero(connecting(n), tol) for n in range(lo - 1, hi + 2)}

    rows = []
    for n in range(lo, hi + 1):
        x = dim_h(k_cx, n - ell + 1)
        y = dim_h(c_cx, n)
        z = dim_h(q_cx, n)
        checks = [
            ("kernel", x - ranks_f[n], ranks_h[n - 1]),
            ("cone", y - ranks_g[n], ranks_f[n]),
            ("cokernel", z - ranks_h[n], ranks_g[n]),
        ]
        for node, lhs, rhs in checks:
            rows.append({"degree": n, "node": node, "lhs": lhs, "rhs": rhs, "holds": lhs == rhs})
    return _report("long exact sequence of kernel, cone and cokernel", rows)


# ---------------------------------------------------------------------------
# random test data
# ---------------------------------------------------------------------------

def _unimodular(rng, n):
    """Random integer matrix with integer inverse, returned with its inverse."""
    g = np.eye(n, dtype=np.int64)
    g_inv = np.eye(n, dtype=np.int64)
    if n < 2:
        return g, g_inv
    for _ in range(2 * n):
        i, j = rng.choice(n, size=2, replace=False)
        c = int(rng.choice([-1, 1]))
        e = np.eye(n, dtype=np.int64)
        e[i, j] = c
        e_inv = np.eye(n, dtype=np.int64)
        e_inv[i, j] = -c
        g = e @ g
        g_inv = g_inv @ e_inv
    perm = rng.permutation(n)
    p = np.eye(n, dtype=np.int64)[perm]
    return p @ g, g_inv @ p.T


def _random_complex(rng, n_degrees, max_dim):
    """Direct sum of homology generators and acyclic pairs, conjugated by unimodular maps."""
    pairs = [0] * n_degrees
    gens = [0] * n_degrees
    for n in range(n_degrees):
        room = max_dim - (pairs[n - 1] if n else 0)
        if n + 1 < n_degrees:
            pairs[n] = int(rng.integers(0, room + 1))
        gens[n] = int(rng.integers(0, room - pairs[n] + 1))
    dims = [gens[n] + pairs[n] + (pairs[n - 1] if n else 0) for n in range(n_degrees)]
    space = GradedVectorSpace(0, tuple(dims))
    conj = [_unimodular(rng, d) for d in dims]
    blocks = {}
    for n in range(n_degrees - 1):
        elem = np.zeros((dims[n + 1], dims[n]), dtype=np.int64)
        # basis order per degree: generators, pair sources, pair targets
        for j in range(pairs[n]):
            elem[gens[n + 1] + pairs[n + 1] + j, gens[n] + j] = 1
        g_next, _ = conj[n + 1]
        _, g_inv = conj[n]
        blocks[n] = RealMatrix(g_next @ elem @ g_inv, integral=True)
    return CochainComplex.from_blocks(space, blocks)


def _commuting_solutions(a_cx, b_cx, ell):
    """Orthonormal basis of {phi : phi d_B - d_A phi = 0} and the block layout of its vectors."""
    a, b = a_cx.space, b_cx.space
    layout = []
    offset = 0
    for n in b.degrees():
        p, q = a.dim(n + ell), b.dim(n)
        if p and q:
            layout.append((n, offset, p, q))
            offset += p * q
    index = {n: (off, p, q) for n, off, p, q in layout}
    equations = []
    for n in range(b.min_degree - 1, b.max_degree + 1):
        rows_out, cols_out = a.dim(n + 1 + ell), b.dim(n)
        if not rows_out or not cols_out:
            continue
        eq = np.zeros((rows_out * cols_out, offset))
        if n + 1 in index:
            off, p, _ = index[n + 1]
            eq[:, off:off + p * b.dim(n + 1)] += np.kron(b_cx.d(n).values.T, np.eye(p))
        if n in index:
            off, p, q = index[n]
            eq[:, off:off + p * q] -= np.kron(np.eye(q), a_cx.d(n + ell).values)
        equations.append(eq)
    if offset == 0:
        return RealMatrix(np.zeros((0, 0))), layout
    if not equations:
        return RealMatrix(np.eye(offset)), layout
    system = RealMatrix(np.vstack(equations))
    return kernel_basis(system), layout


def random_commuting_map(seed, max_degrees=6, max_dim=5, ell=0):
    """
    Random degree-``ell`` chain morphism between two random complexes.

    The complexes are sums of elementary pieces conjugated by integer
    unimodular matrices, so d o d = 0 holds exactly. The map is a Gaussian
    combination of an orthonormal basis of the commutation solution space.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(RESAMPLE_LIMIT):
        n_degrees = int(rng.integers(1, max_degrees + 1))
        a_cx = _random_complex(rng, n_degrees, max_dim)
        b_cx = _random_complex(rng, n_degrees, max_dim)
        solutions, layout = _commuting_solutions(a_cx, b_cx, ell)
        if solutions.cols > 0:
            coefficients = rng.standard_normal(solutions.cols)
            vector = solutions.values @ coefficients
            blocks = {n: RealMatrix(vector[off:off + p * q].reshape((p, q), order="F"))
                      for n, off, p, q in layout}
            phi = ChainMap(b_cx.space, a_cx.space, ell, blocks)
            return ChainMorphism(b_cx, a_cx, phi, commutation_rtol=1e-10)
        logger.info(f"seed {seed}: trivial commutation space on attempt {attempt + 1}, resampling")
    logger.warning(f"seed {seed}: {DegenerateSystem.__name__}, returning the zero map")
    return ChainMorphism(b_cx, a_cx, ChainMap.zero(b_cx.space, a_cx.space, ell), degenerate=True)
