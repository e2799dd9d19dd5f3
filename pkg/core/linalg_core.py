"""
Dense real linear algebra with tolerance-aware rank.

Every matrix that appears in a cohomology computation (differentials,
chain maps, c(psi) blocks, harmonic bases) is carried as a ``RealMatrix``.
Ranks are decided by complete-pivoting elimination; integer-flagged
matrices are ranked exactly with fraction-free elimination.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from core.errors import NonFiniteEntry, ShapeMismatch

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
UNCERTAIN_GAP_DECADES = 6.0


@dataclass(frozen=True, eq=False)
class RealMatrix:
    """
    Immutable dense real matrix.

    Args:
        values: anything ``numpy.asarray`` turns into a 2-D float array
        integral (bool): entries are integers (flow counts); rank is exact
    """
    values: np.ndarray
    integral: bool = False

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ShapeMismatch(f"RealMatrix needs a 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteEntry("matrix contains NaN or Inf entries")
        if self.integral and not np.array_equal(arr, np.round(arr)):
            raise ValueError("integral matrix has non-integer entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, rows, cols, integral=True):
        return cls(np.zeros((rows, cols)), integral=integral)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), integral=True)

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    @property
    def entries(self):
        """Entries in row-major order."""
        return tuple(float(x) for x in self.values.ravel())

    @property
    def T(self):
        return RealMatrix(self.values.T, integral=self.integral)

    def max_abs(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def is_zero(self):
        return self.max_abs() == 0.0

    def scaled(self, factor):
        integral = self.integral and float(factor).is_integer()
        return RealMatrix(self.values * factor, integral=integral)

    def __neg__(self):
        return RealMatrix(-self.values, integral=self.integral)

    def __add__(self, other):
        _check_same_shape(self, other)
        return RealMatrix(self.values + other.values, integral=self.integral and other.integral)

    def __sub__(self, other):
        _check_same_shape(self, other)
        return RealMatrix(self.values - other.values, integral=self.integral and other.integral)

    def to_list(self):
        return [[float(x) for x in row] for row in self.values]

    def __repr__(self):
        flag = ", integral" if self.integral else ""
        return f"RealMatrix({self.rows}x{self.cols}{flag}, {self.to_list()})"


@dataclass(frozen=True)
class RankReport:
    """
    Outcome of a rank decision.

    ``smallest_accepted_pivot`` is 0.0 when the rank is 0 and
    ``largest_rejected_pivot`` is 0.0 when elimination exhausted the matrix.
    """
    rank: int
    pivot_tolerance: float
    smallest_accepted_pivot: float
    largest_rejected_pivot: float
    exact: bool = False

    @property
    def gap_decades(self):
        if self.exact:
            return math.inf
        upper = self.smallest_accepted_pivot if self.rank > 0 else self.pivot_tolerance
        if self.largest_rejected_pivot > 0.0:
            lower = self.largest_rejected_pivot
        elif self.rank > 0:
            lower = self.pivot_tolerance
        else:
            return math.inf
        if lower <= 0.0:
            return math.inf
        if upper <= 0.0:
            return 0.0
        return math.log10(upper / lower)

    @property
    def uncertain(self):
        return self.gap_decades < UNCERTAIN_GAP_DECADES


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")


def auto_tolerance(m):
    rows, cols = m.shape
    return max(rows, cols) * EPS * m.max_abs()


def _integer_rank(m):
    """Bareiss fraction-free elimination over Python integers."""
    work = [[int(round(x)) for x in row] for row in m.values]
    n_rows, n_cols = m.shape
    prev = 1
    r = 0
    pivots = []
    for c in range(n_cols):
        if r == n_rows:
            break
        pivot_row = None
        best = 0
        for i in range(r, n_rows):
            if abs(work[i][c]) > best:
                best = abs(work[i][c])
                pivot_row = i
        if pivot_row is None:
            continue
        work[r], work[pivot_row] = work[pivot_row], work[r]
        p = work[r][c]
        for i in range(r + 1, n_rows):
            lead = work[i][c]
            for j in range(c + 1, n_cols):
                work[i][j] = (work[i][j] * p - lead * work[r][j]) // prev
            work[i][c] = 0
        prev = p
        pivots.append(abs(p))
        r += 1
    smallest = float(min(pivots)) if pivots else 0.0
    return RankReport(rank=r, pivot_tolerance=0.5, smallest_accepted_pivot=smallest,
                      largest_rejected_pivot=0.0, exact=True)


def rank(m, tol=None):
    """
    Rank of ``m`` by complete-pivoting Gaussian elimination.

    Args:
        m (RealMatrix): matrix to rank
        tol (float | None): absolute pivot tolerance; ``None`` picks
            ``max(rows, cols) * eps * max|entry|`` (exact elimination for
            integer-flagged matrices)

    Returns:
        RankReport
    """
    if tol is None and m.integral:
        return _integer_rank(m)
    if tol is None:
        tol = auto_tolerance(m)
    elif not tol > 0:
        raise ValueError(f"rank tolerance must be positive, got {tol}")

    a = np.array(m.values, dtype=float)
    rows, cols = a.shape
    found = 0
    smallest = math.inf
    rejected = 0.0
    for r in range(min(rows, cols)):
        sub = np.abs(a[r:, r:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, sub.shape[1])
        pivot = float(sub[i, j])
        if pivot <= tol:
            rejected = pivot
            break
        if i:
            a[[r, r + i], :] = a[[r + i, r], :]
        if j:
            a[:, [r, r + j]] = a[:, [r + j, r]]
        smallest = min(smallest, pivot)
        factors = a[r + 1:, r] / a[r, r]
        a[r + 1:, r:] -= np.outer(factors, a[r, r:])
        found += 1
    return RankReport(
        rank=found,
        pivot_tolerance=float(tol),
        smallest_accepted_pivot=smallest if found else 0.0,
        largest_rejected_pivot=rejected,
    )


def compose(a, b):
    """Matrix product ``a @ b`` with pairwise summation along the inner axis."""
    if a.cols != b.rows:
        raise ShapeMismatch(f"cannot compose {a.shape} with {b.shape}")
    integral = a.integral and b.integral
    if a.cols == 0:
        return RealMatrix.zeros(a.rows, b.cols, integral=integral)
    # last axis is contiguous, so numpy reduces it pairwise
    products = a.values[:, None, :] * b.values.T[None, :, :]
    return RealMatrix(np.add.reduce(products, axis=-1), integral=integral)


def compose_all(*matrices):
    result = matrices[0]
    for m in matrices[1:]:
        result = compose(result, m)
    return result


def kernel_basis(m, tol=None):
    """Orthonormal columns spanning the null space of ``m`` (``cols - rank`` of them)."""
    rows, cols = m.shape
    if cols == 0:
        return RealMatrix(np.zeros((0, 0)))
    if rows == 0:
        return RealMatrix(np.eye(cols))
    r = rank(m, tol).rank
    if r == 0:
        return RealMatrix(np.eye(cols))
    q, _, _ = scipy.linalg.qr(m.values.T, pivoting=True)
    return RealMatrix(q[:, r:])


def column_basis(m, tol=None):
    """Orthonormal columns spanning the column space of ``m`` (``rank`` of them)."""
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return RealMatrix(np.zeros((rows, 0)))
    r = rank(m, tol).rank
    if r == 0:
        return RealMatrix(np.zeros((rows, 0)))
    q, _, _ = scipy.linalg.qr(m.values, pivoting=True)
    return RealMatrix(q[:, :r])


def complement_basis(basis, dim):
    """Orthonormal basis of the orthogonal complement of the span of ``basis`` in R^dim."""
    k = basis.cols
    if k == 0:
        return RealMatrix(np.eye(dim))
    if k >= dim:
        return RealMatrix(np.zeros((dim, 0)))
    q, _ = np.linalg.qr(basis.values, mode="complete")
    return RealMatrix(q[:, k:])


def block_matrix(blocks):
    """Assemble a matrix from a nested list of RealMatrix blocks."""
    integral = all(b.integral for row in blocks for b in row)
    return RealMatrix(np.block([[b.values for b in row] for row in blocks]), integral=integral)
