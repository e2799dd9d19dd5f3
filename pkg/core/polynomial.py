"""
Integer Laurent polynomials in t, used for Morse, rank and Poincare series.
"""
from dataclasses import dataclass

from core.errors import InexactDivision, NegativeCoefficient


@dataclass(frozen=True)
class MorsePolynomial:
    """sum_k coefficients[k - min_degree] * t**k"""
    coefficients: tuple = ()
    min_degree: int = 0

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        lo = int(self.min_degree)
        # canonical form: strip zeros on both ends
        start, end = 0, len(coeffs)
        while start < end and coeffs[start] == 0:
            start += 1
        while end > start and coeffs[end - 1] == 0:
            end -= 1
        object.__setattr__(self, "coefficients", coeffs[start:end])
        object.__setattr__(self, "min_degree", lo + start if end > start else 0)

    @classmethod
    def from_dims(cls, dims, min_degree=0):
        return cls(tuple(dims), min_degree)

    @classmethod
    def monomial(cls, degree, coefficient=1):
        return cls((coefficient,), degree)

    @property
    def max_degree(self):
        return self.min_degree + len(self.coefficients) - 1

    def is_zero(self):
        return not self.coefficients

    def coefficient(self, k):
        i = k - self.min_degree
        if 0 <= i < len(self.coefficients):
            return self.coefficients[i]
        return 0

    def __getitem__(self, k):
        return self.coefficient(k)

    def as_dict(self):
        return {self.min_degree + i: c for i, c in enumerate(self.coefficients)}

    def dense(self, lo, hi):
        """Coefficients for degrees lo..hi inclusive."""
        return [self.coefficient(k) for k in range(lo, hi + 1)]

    def shifted(self, k):
        """Multiply by t**k."""
        return MorsePolynomial(self.coefficients, self.min_degree + k)

    def _combine(self, other, sign):
        if self.is_zero():
            return MorsePolynomial(tuple(sign * c for c in other.coefficients), other.min_degree)
        if other.is_zero():
            return self
        lo = min(self.min_degree, other.min_degree)
        hi = max(self.max_degree, other.max_degree)
        return MorsePolynomial(
            tuple(self.coefficient(k) + sign * other.coefficient(k) for k in range(lo, hi + 1)),
            lo,
        )

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, other):
        if isinstance(other, int):
            return MorsePolynomial(tuple(other * c for c in self.coefficients), self.min_degree)
        if self.is_zero() or other.is_zero():
            return MorsePolynomial()
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return MorsePolynomial(tuple(out), self.min_degree + other.min_degree)

    __rmul__ = __mul__

    def divide_by_one_plus_t(self):
        """
        Exact quotient by (1 + t).

        Raises:
            InexactDivision: if (1 + t) does not divide the polynomial
        """
        if self.is_zero():
            return MorsePolynomial()
        n = self.coefficients
        q = []
        carry = 0
        for c in n[:-1]:
            carry = c - carry
            q.append(carry)
        if n[-1] != carry:
            raise InexactDivision(
                f"(1+t) does not divide {self}: remainder {n[-1] - carry}", numerator=self
            )
        return MorsePolynomial(tuple(q), self.min_degree)

    def has_nonnegative_coefficients(self):
        return all(c >= 0 for c in self.coefficients)

    def __str__(self):
        if self.is_zero():
            return "0"
        terms = []
        for k, c in self.as_dict().items():
            if c == 0:
                continue
            terms.append(f"{c}" if k == 0 else f"{c}t^{k}")
        return " + ".join(terms)


ONE_PLUS_T = MorsePolynomial((1, 1), 0)


def q_polynomial(m, v, bpsi, ell):
    """
    Cone Morse polynomial certificate.

    Q(t) = [(1 + t^(l-1)) M(t) - (t^(l-1) + t^l) V(t) - B(t)] / (1 + t)

    Raises:
        InexactDivision: the numerator is not divisible by (1 + t)
        NegativeCoefficient: Q has a negative coefficient
    """
    one = MorsePolynomial.monomial(0)
    numerator = (one + one.shifted(ell - 1)) * m - (one.shifted(ell - 1) + one.shifted(ell)) * v - bpsi
    q = numerator.divide_by_one_plus_t()
    if not q.has_nonnegative_coefficients():
        raise NegativeCoefficient(f"Q(t) = {q} has a negative coefficient", quotient=q)
    return q


def morse_q_polynomial(m, b):
    """Classical certificate Q(t) = (M(t) - B(t)) / (1 + t)."""
    q = (m - b).divide_by_one_plus_t()
    if not q.has_nonnegative_coefficients():
        raise NegativeCoefficient(f"Q(t) = {q} has a negative coefficient", quotient=q)
    return q
