import logging

from sympy import multiplicity
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from wordwidth.exceptions import DimensionMismatchError, NotUnimodularError, PreconditionError
from .models import CongruenceLevel, ModMatrix, SquareIntMatrix

logger = logging.getLogger(__name__)


class MatrixService:

    @staticmethod
    def mat_mul(a: SquareIntMatrix, b: SquareIntMatrix) -> SquareIntMatrix:
        if a.n != b.n:
            raise DimensionMismatchError(f"Cannot multiply {a.n}x{a.n} by {b.n}x{b.n}.")
        return a * b

    @staticmethod
    def mat_inv(a: SquareIntMatrix) -> SquareIntMatrix:
        """Exact inverse through the adjugate; only defined for det = ±1."""
        return a.inverse()

    @staticmethod
    def product(factors, n=None):
        factors = list(factors)
        if not factors:
            if n is None:
                raise PreconditionError("Empty product needs an explicit dimension.")
            return SquareIntMatrix.identity(n)
        result = factors[0]
        for f in factors[1:]:
            result = result * f
        return result

    @staticmethod
    def elementary(n, i, j, x) -> SquareIntMatrix:
        if i == j:
            raise PreconditionError(f"Elementary matrix needs i != j, got i = j = {i}.")
        if not (1 <= i <= n and 1 <= j <= n):
            raise PreconditionError(f"Index ({i},{j}) outside 1..{n}.")
        rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
        rows[i - 1][j - 1] = x
        return SquareIntMatrix(rows)

    @staticmethod
    def diagonal(entries) -> SquareIntMatrix:
        n = len(entries)
        return SquareIntMatrix([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def in_congruence(g: SquareIntMatrix, q) -> bool:
        q = CongruenceLevel.coerce(q).q
        return all(
            (x - (1 if i == j else 0)) % q == 0
            for i, row in enumerate(g.rows) for j, x in enumerate(row)
        )

    @staticmethod
    def in_U(g: SquareIntMatrix, q) -> bool:
        q = CongruenceLevel.coerce(q).q
        for i, row in enumerate(g.rows):
            for j, x in enumerate(row):
                if i == j and x != 1:
                    return False
                if i > j and x != 0:
                    return False
                if i < j and x % q:
                    return False
        return True

    @staticmethod
    def in_L(g: SquareIntMatrix, q) -> bool:
        return MatrixService.in_U(g.transpose(), q)

    @staticmethod
    def mennicke_in_E(g: SquareIntMatrix, q) -> bool:
        """
        Membership in E(n,Z;q) for n >= 3: g must lie in SL_n(Z;q) and every
        diagonal entry must be 1 mod q².
        """
        return not MatrixService.mennicke_violations(g, q)

    @staticmethod
    def mennicke_violations(g: SquareIntMatrix, q):
        """Lists the reasons g fails the Mennicke test, as error details."""
        q = CongruenceLevel.coerce(q).q
        if g.n < 3:
            raise PreconditionError(f"The Mennicke characterization needs n >= 3, got n = {g.n}.")
        problems = []
        if g.det != 1:
            problems.append({"field": "det", "message": f"determinant is {g.det}"})
        if not MatrixService.in_congruence(g, q):
            problems.append({"field": "congruence", "message": f"not congruent to I mod {q}"})
        for i in range(1, g.n + 1):
            if (g.entry(i, i) - 1) % (q * q):
                problems.append({"field": f"({i},{i})", "message": f"diagonal entry {g.entry(i, i)} is not 1 mod {q * q}"})
        return problems

    @staticmethod
    def reduce_mod(g: SquareIntMatrix, m) -> ModMatrix:
        return ModMatrix(g.rows, m)

    @staticmethod
    def is_scalar(g) -> bool:
        lam = g.rows[0][0]
        return all(x == (lam if i == j else 0) for i, row in enumerate(g.rows) for j, x in enumerate(row))


class ModularLinearAlgebra:
    """
    Linear algebra over Z/p^K. Elimination always pivots on an entry of
    least p-adic valuation, so every division is by a unit times a power of p
    that divides the whole remaining column.
    """

    @staticmethod
    def valuation(x, p, K):
        """p-adic valuation of a residue mod p^K; K for zero."""
        x %= p ** K
        if x == 0:
            return K
        return int(multiplicity(p, x))

    @staticmethod
    def rank_mod_p(rows, p) -> int:
        if not rows or not rows[0]:
            return 0
        dm = DomainMatrix.from_list([[x % p for x in row] for row in rows], GF(p))
        return int(dm.rank())

    @staticmethod
    def diagonalize(M, p, K):
        """
        Returns (D, P_ops, Q) with D diagonal entries, the recorded row
        operations and the column transform Q such that rows(M)·Q is diagonal
        after the row operations.
        """
        mod = p ** K
        t = len(M)
        s = len(M[0]) if t else 0
        A = [[x % mod for x in row] for row in M]
        Q = [[1 if i == j else 0 for j in range(s)] for i in range(s)]
        row_ops = []
        diag = []
        for r in range(min(t, s)):
            best = None
            for i in range(r, t):
                for j in range(r, s):
                    if A[i][j]:
                        v = ModularLinearAlgebra.valuation(A[i][j], p, K)
                        if best is None or v < best[0]:
                            best = (v, i, j)
                            if v == 0:
                                break
                if best is not None and best[0] == 0:
                    break
            if best is None:
                break
            v, pi, pj = best
            if pi != r:
                A[r], A[pi] = A[pi], A[r]
                row_ops.append(('swap', r, pi))
            if pj != r:
                for row in A:
                    row[r], row[pj] = row[pj], row[r]
                for row in Q:
                    row[r], row[pj] = row[pj], row[r]
            pv = p ** v
            unit_inv = pow(A[r][r] // pv, -1, mod)
            # 1. Clear the pivot column below the pivot
            for i in range(r + 1, t):
                if A[i][r]:
                    f = (A[i][r] // pv) * unit_inv % mod
                    A[i] = [(x - f * y) % mod for x, y in zip(A[i], A[r])]
                    row_ops.append(('sub', i, r, f))
            # 2. Clear the pivot row to the right with column operations
            for j in range(r + 1, s):
                if A[r][j]:
                    f = (A[r][j] // pv) * unit_inv % mod
                    for row in A:
                        row[j] = (row[j] - f * row[r]) % mod
                    for row in Q:
                        row[j] = (row[j] - f * row[r]) % mod
            diag.append(A[r][r])
        return diag, row_ops, Q

    @staticmethod
    def solve(M, v, p, K):
        """
        Any ε with M·ε ≡ v (mod p^K), or None when the system is inconsistent.
        """
        mod = p ** K
        t = len(M)
        if len(v) != t:
            raise DimensionMismatchError(f"Right-hand side has length {len(v)}, expected {t}.")
        s = len(M[0]) if t else 0
        diag, row_ops, Q = ModularLinearAlgebra.diagonalize(M, p, K)
        b = [x % mod for x in v]
        for op in row_ops:
            if op[0] == 'swap':
                _, r, i = op
                b[r], b[i] = b[i], b[r]
            else:
                _, i, r, f = op
                b[i] = (b[i] - f * b[r]) % mod
        z = [0] * s
        for r, d in enumerate(diag):
            e = ModularLinearAlgebra.valuation(d, p, K)
            if ModularLinearAlgebra.valuation(b[r], p, K) < e:
                return None
            pe = p ** e
            z[r] = (b[r] // pe) * pow(d // pe, -1, mod) % mod
        if any(b[r] for r in range(len(diag), t)):
            return None
        return [sum(Q[i][j] * z[j] for j in range(s)) % mod for i in range(s)]

    @staticmethod
    def apply(M, x, mod):
        return [sum(a * b for a, b in zip(row, x)) % mod for row in M]
