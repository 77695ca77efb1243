"""
Immutable matrix values.

Nothing here is an ORM model: the project keeps no tables. Every value is a
frozen dataclass so certificate replay can never mutate its inputs.
Indices in public methods are 1-based, matching e_{i,j} notation.
"""
from dataclasses import dataclass
from functools import cached_property
import re

from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from wordwidth.exceptions import (
    DimensionMismatchError, MatrixFormatError, NotUnimodularError, PreconditionError,
)

_ENTRY_RE = re.compile(r'^-?\d+$')


def _mul_rows(a_rows, b_rows, modulus=None):
    n = len(a_rows)
    b_cols = list(zip(*b_rows))
    out = []
    for row in a_rows:
        new_row = []
        for col in b_cols:
            total = 0
            for k in range(n):
                x = row[k]
                if x:
                    total += x * col[k]
            new_row.append(total % modulus if modulus else total)
        out.append(tuple(new_row))
    return tuple(out)


def _adjugate_and_det(rows):
    dm = DomainMatrix([[ZZ(x) for x in row] for row in rows], (len(rows), len(rows)), ZZ)
    adj, det = dm.adj_det()
    return [[int(x) for x in row] for row in adj.to_list()], int(det)


@dataclass(frozen=True)
class CongruenceLevel:
    q: int

    def __post_init__(self):
        if int(self.q) < 1:
            raise PreconditionError(f"Congruence level must be positive, got {self.q}.")
        object.__setattr__(self, 'q', int(self.q))

    @classmethod
    def coerce(cls, value):
        return value if isinstance(value, cls) else cls(value)


@dataclass(frozen=True)
class SquareIntMatrix:
    """n×n matrix over the integers; carrier for elements of SL_n(Z)."""
    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.rows)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise DimensionMismatchError(f"Matrix must be square and non-empty, got {len(rows)} rows.")
        object.__setattr__(self, 'rows', rows)

    # Construction

    @classmethod
    def identity(cls, n):
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def zero(cls, n):
        return cls(tuple((0,) * n for _ in range(n)))

    @classmethod
    def parse(cls, text):
        """Reads the text format "1,2;0,1" (rows by ';', entries by ',')."""
        if not isinstance(text, str) or not text.strip():
            raise MatrixFormatError("Empty matrix text.")
        rows = []
        for r, chunk in enumerate(text.strip().split(';'), start=1):
            entries = [part.strip() for part in chunk.split(',')]
            for c, entry in enumerate(entries, start=1):
                if not _ENTRY_RE.match(entry):
                    raise MatrixFormatError(
                        f"Bad entry '{entry}' at row {r}, column {c}.",
                        [{"field": f"({r},{c})", "message": entry}],
                    )
            rows.append(tuple(int(e) for e in entries))
        if any(len(row) != len(rows) for row in rows):
            raise MatrixFormatError(f"Matrix text is not square: {len(rows)} rows of lengths {[len(r) for r in rows]}.")
        return cls(tuple(rows))

    @classmethod
    def from_blocks(cls, blocks):
        """Block diagonal matrix built from square matrices, top-left first."""
        n = sum(b.n for b in blocks)
        rows = [[0] * n for _ in range(n)]
        offset = 0
        for block in blocks:
            for i, row in enumerate(block.rows):
                rows[offset + i][offset:offset + block.n] = row
            offset += block.n
        return cls(rows)

    # Access

    @property
    def n(self):
        return len(self.rows)

    def entry(self, i, j):
        return self.rows[i - 1][j - 1]

    def format(self):
        return ';'.join(','.join(str(x) for x in row) for row in self.rows)

    def __str__(self):
        return self.format()

    def to_lists(self):
        return [list(row) for row in self.rows]

    def to_domain(self):
        return DomainMatrix([[ZZ(x) for x in row] for row in self.rows], (self.n, self.n), ZZ)

    def is_identity(self):
        return self == SquareIntMatrix.identity(self.n)

    def identity_like(self):
        return SquareIntMatrix.identity(self.n)

    def block(self, start, size):
        """Diagonal sub-block of `size` rows starting at 1-based `start`."""
        s = start - 1
        return SquareIntMatrix(tuple(row[s:s + size] for row in self.rows[s:s + size]))

    def embed(self, n, start=1):
        """Places this matrix as a diagonal block of I_n starting at row `start`."""
        rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        s = start - 1
        for i, row in enumerate(self.rows):
            rows[s + i][s:s + self.n] = row
        return SquareIntMatrix(rows)

    def transpose(self):
        return SquareIntMatrix(tuple(zip(*self.rows)))

    # Arithmetic

    def __mul__(self, other):
        if not isinstance(other, SquareIntMatrix):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatchError(f"Cannot multiply {self.n}x{self.n} by {other.n}x{other.n}.")
        return SquareIntMatrix(_mul_rows(self.rows, other.rows))

    def __add__(self, other):
        return SquareIntMatrix(tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other):
        return SquareIntMatrix(tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def scale(self, c):
        return SquareIntMatrix(tuple(tuple(c * x for x in row) for row in self.rows))

    @cached_property
    def det(self):
        # DomainMatrix over ZZ uses fraction-free (Bareiss) elimination.
        return int(self.to_domain().det())

    def is_unimodular(self):
        return self.det in (1, -1)

    def inverse(self):
        adj, det = _adjugate_and_det(self.rows)
        if det not in (1, -1):
            raise NotUnimodularError(f"Determinant {det} is not ±1.")
        return SquareIntMatrix(tuple(tuple(det * x for x in row) for row in adj))

    def conjugate_by(self, x):
        """x⁻¹·self·x."""
        return x.inverse() * self * x

    def reduce(self, m):
        return ModMatrix(self.rows, m)


@dataclass(frozen=True)
class ModMatrix:
    """n×n matrix over Z/m with reduced entries."""
    rows: tuple
    modulus: int

    def __post_init__(self):
        m = int(self.modulus)
        if m < 2:
            raise PreconditionError(f"Modulus must be at least 2, got {m}.")
        rows = tuple(tuple(int(x) % m for x in row) for row in self.rows)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise DimensionMismatchError("Matrix must be square and non-empty.")
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'modulus', m)

    @classmethod
    def identity(cls, n, m):
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)), m)

    @classmethod
    def from_flat(cls, flat, n, m):
        return cls(tuple(tuple(flat[i * n:(i + 1) * n]) for i in range(n)), m)

    def _like(self, rows):
        return ModMatrix(rows, self.modulus)

    @property
    def n(self):
        return len(self.rows)

    @property
    def flat(self):
        return tuple(x for row in self.rows for x in row)

    def entry(self, i, j):
        return self.rows[i - 1][j - 1]

    def format(self):
        return ';'.join(','.join(str(x) for x in row) for row in self.rows)

    def __str__(self):
        return f"{self.format()} (mod {self.modulus})"

    def identity_like(self):
        return self._like(ModMatrix.identity(self.n, self.modulus).rows)

    def lift(self):
        """Entrywise representative in [0, m) as an integer matrix."""
        return SquareIntMatrix(self.rows)

    def __mul__(self, other):
        if not isinstance(other, ModMatrix):
            return NotImplemented
        if other.n != self.n or other.modulus != self.modulus:
            raise DimensionMismatchError(
                f"Cannot multiply {self.n}x{self.n} mod {self.modulus} by {other.n}x{other.n} mod {other.modulus}."
            )
        return self._like(_mul_rows(self.rows, other.rows, self.modulus))

    def __add__(self, other):
        return self._like(tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other):
        return self._like(tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def scale(self, c):
        return self._like(tuple(tuple(c * x for x in row) for row in self.rows))

    @cached_property
    def det(self):
        return int(SquareIntMatrix(self.rows).det) % self.modulus

    def inverse(self):
        adj, det = _adjugate_and_det(self.rows)
        try:
            det_inv = pow(det, -1, self.modulus)
        except ValueError:
            raise NotUnimodularError(f"Determinant {det % self.modulus} is not a unit mod {self.modulus}.")
        return self._like(tuple(tuple(det_inv * x for x in row) for row in adj))

    def conjugate_by(self, x):
        return x.inverse() * self * x

    def is_identity(self):
        return self.rows == ModMatrix.identity(self.n, self.modulus).rows

    def is_scalar(self):
        lam = self.rows[0][0]
        return all(
            x == (lam if i == j else 0)
            for i, row in enumerate(self.rows) for j, x in enumerate(row)
        )

    def trace(self):
        return sum(self.rows[i][i] for i in range(self.n)) % self.modulus


@dataclass(frozen=True)
class TruncatedPadicMatrix(ModMatrix):
    """A ModMatrix over Z/p^K read as a precision-K approximation of a Z_p matrix."""
    p: int = 0
    K: int = 0

    def __post_init__(self):
        if self.K < 1 or self.p < 2 or self.modulus != self.p ** self.K:
            raise PreconditionError(f"Inconsistent precision: modulus {self.modulus}, p={self.p}, K={self.K}.")
        super().__post_init__()

    @classmethod
    def of(cls, rows, p, K):
        return cls(rows, p ** K, p, K)

    def _like(self, rows):
        return TruncatedPadicMatrix(rows, self.modulus, self.p, self.K)

    def reduce_precision(self, k):
        return TruncatedPadicMatrix.of(self.rows, self.p, k)

    def __str__(self):
        return f"{self.format()} (mod {self.p}^{self.K})"
