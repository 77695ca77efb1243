"""
Value types for truncated p-adic work: polynomial maps with integer
coefficients, Newton traces, lift certificates and width-bound reports.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

from sympy import ZZ, multiplicity
from sympy.parsing.sympy_parser import parse_expr
from sympy.polys.rings import ring

from matrix_core.models import TruncatedPadicMatrix
from words.models import Word
from wordwidth.exceptions import DimensionMismatchError, PreconditionError


@dataclass(frozen=True)
class PolyMapDescriptor:
    """
    A map Z^s → Z^t given by integer polynomials in the generators of `ring`.
    Evaluation reduces every power and product mod the modulus, so it
    commutes with reduction mod p^K.
    """
    ring: object
    polys: tuple

    @classmethod
    def from_exprs(cls, exprs, variables):
        R, *_ = ring(','.join(variables), ZZ)
        polys = []
        for expr in exprs:
            try:
                polys.append(R.from_expr(parse_expr(expr) if isinstance(expr, str) else expr))
            except (ValueError, SyntaxError, TypeError) as e:
                raise PreconditionError(f"'{expr}' is not an integer polynomial in {', '.join(variables)}: {e}")
        return cls(R, tuple(polys))

    @property
    def source_arity(self):
        return self.ring.ngens

    @property
    def target_arity(self):
        return len(self.polys)

    @staticmethod
    def _evaluate_poly(poly, point, modulus):
        total = 0
        for monom, coeff in poly.terms():
            term = int(coeff)
            for v, e in zip(point, monom):
                if e:
                    term = term * pow(v, e, modulus) % modulus
            total += term
        return total % modulus

    def evaluate(self, point, modulus):
        if len(point) != self.source_arity:
            raise DimensionMismatchError(f"Expected {self.source_arity} coordinates, got {len(point)}.")
        return [self._evaluate_poly(f, point, modulus) for f in self.polys]

    def jacobian(self):
        return tuple(tuple(f.diff(x) for x in self.ring.gens) for f in self.polys)

    def jacobian_at(self, point, modulus):
        return [[self._evaluate_poly(df, point, modulus) for df in row] for row in self.jacobian()]

    def pval(self, p):
        """min over coordinates of the largest k with p^k dividing every coefficient; inf for 0."""
        vals = [
            int(multiplicity(p, int(c)))
            for f in self.polys for _, c in f.terms() if c
        ]
        return min(vals) if vals else math.inf

    def is_zero(self):
        return all(not f for f in self.polys)


@dataclass(frozen=True)
class NewtonResult:
    """Successive approximations and the valuations of their residuals."""
    point: tuple
    trace: tuple
    valuations: tuple

    @property
    def iterations(self):
        return len(self.trace) - 1


@dataclass(frozen=True)
class GroupLift:
    """x⁻¹gx·y⁻¹hy ≡ target (mod p^K); x and y are ≡ I mod p."""
    x: TruncatedPadicMatrix
    y: TruncatedPadicMatrix
    valuations: tuple


@dataclass(frozen=True)
class LiftFactor:
    """w(elements)^sign, all elements mod p^K."""
    elements: tuple
    sign: int = 1


@dataclass(frozen=True)
class LiftSample:
    target: TruncatedPadicMatrix
    factors: tuple = ()
    residual_valuation: int = 0
    iterations: int = 0
    ok: bool = False
    reason: str = ''


@dataclass(frozen=True)
class LiftCertificate:
    """
    Sampled covering of SL_n(Z/p^K) by products of `exponent` word values.
    `status` is PASS when every sample lifted and replays, FAIL when some did
    not, INCONCLUSIVE when no base pair was found.
    """
    word: Word
    n: int
    p: int
    K: int
    seed: int
    exponent: int
    status: str
    g: Optional[TruncatedPadicMatrix] = None
    h: Optional[TruncatedPadicMatrix] = None
    base: tuple = ()
    samples: tuple = ()
    full: bool = False
    notes: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return sum(1 for s in self.samples if s.ok)


@dataclass(frozen=True)
class WidthBoundReport:
    case: str
    k: Optional[int]
    bound: int
    oracle: Optional[int] = None
    verified: bool = False
