from dataclasses import dataclass, field
from typing import Optional

from matrix_core.models import SquareIntMatrix
from matrix_core.services import MatrixService
from words.models import Word

FACTOR_CLASSES = ('U', 'L', 'Uc', 'Eblock')

# class sequence of a full E(n,Z;q) certificate
CONGRUENCE_SEQUENCE = ('L', 'Uc', 'Uc', 'Uc', 'U')


@dataclass(frozen=True)
class ElementaryFactor:
    n: int
    i: int
    j: int
    x: int

    def matrix(self):
        return MatrixService.elementary(self.n, self.i, self.j, self.x)

    def __str__(self):
        return f"e_{self.i},{self.j}({self.x})"


@dataclass(frozen=True)
class CommutatorBridge:
    """[g,h] = g⁻¹h⁻¹gh written as four elementary factors, and the elementary it equals."""
    g: ElementaryFactor
    h: ElementaryFactor
    factors: tuple
    target: SquareIntMatrix


@dataclass(frozen=True)
class ClassifiedFactor:
    kind: str
    matrix: SquareIntMatrix
    # Uc: matrix = h·k·h⁻¹ with k in U_n(Z;q)
    h: Optional[SquareIntMatrix] = None
    k: Optional[SquareIntMatrix] = None
    # Eblock: size of the trailing block
    block_size: Optional[int] = None

    def __post_init__(self):
        if self.kind not in FACTOR_CLASSES:
            raise ValueError(f"Unknown factor class '{self.kind}'.")


@dataclass(frozen=True)
class FactorCertificate:
    input: SquareIntMatrix
    q: int
    factors: tuple
    notes: tuple = ()

    @property
    def class_sequence(self):
        return ','.join(f.kind for f in self.factors)

    @property
    def n(self):
        return self.input.n


@dataclass(frozen=True)
class BlockDiagFactors:
    """The four matrices whose product l1⁻¹u1⁻¹l2u2 is diag(g_1, ..., g_m)."""
    l1: SquareIntMatrix
    u1: SquareIntMatrix
    l2: SquareIntMatrix
    u2: SquareIntMatrix
    certificate: FactorCertificate


@dataclass(frozen=True)
class PeelStep:
    """c2·r·c1·g·r2 = diag(1, reduced)."""
    c1: SquareIntMatrix
    r: SquareIntMatrix
    c2: SquareIntMatrix
    r2: SquareIntMatrix
    reduced: SquareIntMatrix
    stable_range: tuple = ()

    @property
    def prefix(self):
        return (self.c1, self.r, self.c2)


@dataclass
class AlternatingResult:
    success: bool
    factors: list = field(default_factory=list)
    residual: Optional[SquareIntMatrix] = None
    attempts: int = 0
    reason: str = ''

    @property
    def length(self):
        return len(self.factors)


@dataclass(frozen=True)
class QWitness:
    word: Word
    g: SquareIntMatrix
    h: SquareIntMatrix
    commutator: SquareIntMatrix
    q: int
    conjugator: SquareIntMatrix

    @property
    def d(self):
        return self.q * self.q


@dataclass(frozen=True)
class UnipotentCapture:
    """
    h = f⁻¹·(fh): f carries the superdiagonal q − h_{i,i+1} and is covered by
    a tridiagonal triple, fh has all superdiagonal entries q and is conjugate
    to the standard element.
    """
    h: SquareIntMatrix
    f: SquareIntMatrix
    f_cover: tuple
    fh: SquareIntMatrix
    standard: SquareIntMatrix
    conjugator: SquareIntMatrix
