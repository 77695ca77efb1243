"""
Finite groups SL_n(Z/m) held as explicit element tables.

Elements are flat row-major tuples of residues; everything else (value sets,
closures, covers) refers to them by ordinal. Ordinal 0 is always the identity.
"""
from dataclasses import dataclass, field
from typing import Optional

from matrix_core.models import ModMatrix, SquareIntMatrix
from matrix_core.services import MatrixService, ModularLinearAlgebra
from wordwidth.exceptions import DimensionMismatchError, MembershipError, PreconditionError


def mul_flat(x, y, n, m):
    out = []
    for i in range(n):
        row = x[i * n:(i + 1) * n]
        for j in range(n):
            total = 0
            for k in range(n):
                a = row[k]
                if a:
                    total += a * y[k * n + j]
            out.append(total % m)
    return tuple(out)


def apply_elementary(flat, n, m, i, j, x):
    """flat·e_{i,j}(x): column j gains x times column i (0-based indices)."""
    out = list(flat)
    for r in range(n):
        out[r * n + j] = (out[r * n + j] + x * flat[r * n + i]) % m
    return tuple(out)


class FiniteGroupTable:
    """
    SL_n(Z/m) enumerated by BFS from the elementary generators e_{i,j}(±1).
    `parents[k]` is (ordinal of the parent, generator index), so every element
    is a product of generators read off the BFS tree.
    """

    def __init__(self, n, modulus, elements, parents, generators):
        self.n = n
        self.modulus = modulus
        self.elements = elements
        self.parents = parents
        self.generators = generators
        self.index = {e: k for k, e in enumerate(elements)}
        self._inverses = {}
        self._generator_ordinals = None
        self._class_ids = None

    def __len__(self):
        return len(self.elements)

    def __repr__(self):
        return f"FiniteGroupTable(SL_{self.n}(Z/{self.modulus}), {len(self)} elements)"

    @property
    def identity(self):
        return 0

    def element(self, ordinal) -> ModMatrix:
        return ModMatrix.from_flat(self.elements[ordinal], self.n, self.modulus)

    def ordinal(self, g):
        """Ordinal of a ModMatrix, SquareIntMatrix or flat tuple."""
        if isinstance(g, (ModMatrix, SquareIntMatrix)):
            if g.n != self.n:
                raise DimensionMismatchError(f"Expected a {self.n}x{self.n} matrix, got {g.n}x{g.n}.")
            flat = tuple(x % self.modulus for row in g.rows for x in row)
        else:
            flat = tuple(x % self.modulus for x in g)
        try:
            return self.index[flat]
        except KeyError:
            raise MembershipError(f"Element {flat} is not in SL_{self.n}(Z/{self.modulus}).")

    def mul(self, a, b):
        return self.index[mul_flat(self.elements[a], self.elements[b], self.n, self.modulus)]

    def inv(self, a):
        if a not in self._inverses:
            inverse = self.element(a).inverse()
            b = self.index[inverse.flat]
            self._inverses[a] = b
            self._inverses[b] = a
        return self._inverses[a]

    def conjugate(self, a, x):
        """x⁻¹·a·x"""
        return self.mul(self.mul(self.inv(x), a), x)

    @property
    def generator_ordinals(self):
        if self._generator_ordinals is None:
            ords = []
            for i, j, x in self.generators:
                flat = apply_elementary(self.elements[0], self.n, self.modulus, i, j, x)
                ords.append(self.index[flat])
            self._generator_ordinals = ords
        return self._generator_ordinals

    def word_of(self, ordinal):
        """Generator triples (i, j, x), 0-based, whose product is the element."""
        path = []
        while ordinal:
            parent, gen = self.parents[ordinal]
            path.append(self.generators[gen])
            ordinal = parent
        path.reverse()
        return path

    def lift(self, ordinal) -> SquareIntMatrix:
        """An SL_n(Z) matrix reducing to the element, as a product of e_{i,j}(±1)."""
        return MatrixService.product(
            [MatrixService.elementary(self.n, i + 1, j + 1, x) for i, j, x in self.word_of(ordinal)],
            self.n,
        )


@dataclass
class SymSet:
    """
    A subset of a table, one membership byte per ordinal. Sets built by the
    services are symmetric; `approximate` marks sets assembled from samples.
    """
    table: FiniteGroupTable
    bits: bytearray
    conjugation_invariant: bool = False
    approximate: bool = False

    @classmethod
    def empty(cls, table, **flags):
        return cls(table, bytearray(len(table)), **flags)

    @classmethod
    def of(cls, table, ordinals, symmetrize=True, **flags):
        s = cls.empty(table, **flags)
        for k in ordinals:
            s.bits[k] = 1
            if symmetrize:
                s.bits[table.inv(k)] = 1
        return s

    def __contains__(self, ordinal):
        return bool(self.bits[ordinal])

    def __iter__(self):
        return (k for k, b in enumerate(self.bits) if b)

    def __len__(self):
        return sum(self.bits)

    def __eq__(self, other):
        if not isinstance(other, SymSet):
            return NotImplemented
        return self.table is other.table and self.bits == other.bits

    def issubset(self, other):
        return all(other.bits[k] for k in self)

    def is_symmetric(self):
        return all(self.bits[self.table.inv(k)] for k in self)

    def is_trivial(self):
        return all(k == 0 for k in self)

    def union(self, other):
        bits = bytearray(a | b for a, b in zip(self.bits, other.bits))
        return SymSet(
            self.table, bits,
            conjugation_invariant=self.conjugation_invariant and other.conjugation_invariant,
            approximate=self.approximate or other.approximate,
        )

    def elements(self):
        return [self.table.element(k) for k in self]


@dataclass(frozen=True)
class LieMatrix(ModMatrix):
    """Trace-zero matrix over F_p, an element of sl_n(F_p)."""

    def __post_init__(self):
        super().__post_init__()
        if self.trace() != 0:
            raise PreconditionError(f"Trace is {self.trace()} mod {self.modulus}; sl_n needs trace 0.")

    @property
    def p(self):
        return self.modulus

    @classmethod
    def coerce(cls, g, p=None):
        if isinstance(g, cls):
            return g
        if isinstance(g, ModMatrix):
            return cls(g.rows, g.modulus)
        return cls(g.rows if hasattr(g, 'rows') else g, p)

    @classmethod
    def unit(cls, n, p, i, j, x=1):
        """x·E_{i,j} with 1-based indices, i ≠ j."""
        rows = [[0] * n for _ in range(n)]
        rows[i - 1][j - 1] = x
        return cls(rows, p)

    def _like(self, rows):
        return ModMatrix(rows, self.modulus)

    def is_zero(self):
        return not any(self.flat)

    def rank(self):
        return ModularLinearAlgebra.rank_mod_p(self.rows, self.modulus)


@dataclass(frozen=True)
class ConjSumResult:
    """B = Σ x⁻¹·A·x over the conjugators; `bound` is the ladder bound for `strategy`."""
    conjugators: tuple
    strategy: str
    bound: int

    @property
    def length(self):
        return len(self.conjugators)


@dataclass(frozen=True)
class WidthEstimate:
    """Exact when `lower == upper`; sampled value sets give only an interval."""
    lower: int
    upper: int
    approximate: bool
    closure_size: int
    value_set_size: int

    @property
    def exact(self):
        return self.lower == self.upper


@dataclass(frozen=True)
class CoverCheck:
    """Result of a set-closure check: `holds` when exponent <= bound."""
    name: str
    parameter: int
    bound: int
    exponent: int
    holds: bool
    details: dict = field(default_factory=dict)
