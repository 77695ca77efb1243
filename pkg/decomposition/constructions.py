"""
Constructions that place word values inside the unipotent groups: the
commutator witness in SL_3, the three-offset tridiagonal cover and the
conjugation of unipotents with constant superdiagonal.
"""
import logging
from math import gcd

from sympy.core.intfunc import igcdex

from matrix_core.models import CongruenceLevel, SquareIntMatrix
from matrix_core.services import MatrixService
from words.models import Word
from words.services import WordService
from wordwidth.exceptions import CertificateError, MembershipError, PreconditionError, TrivialWordError
from .models import QWitness, UnipotentCapture

logger = logging.getLogger(__name__)

M = MatrixService

# Column vectors tried for h = I + v1·E13 + v2·E23, in order
_COLUMN_CANDIDATES = ((0, 1), (1, 0), (1, 1))


class ConstructionService:

    @staticmethod
    def tridiagonal_cover(q, a):
        """
        Three matrices of U_n(Z;q), n = len(a) + 1. g_k carries q·a_i at
        (i, i+1) for i ≡ k (mod 3), so each is block diagonal with 3×3
        unipotent blocks at offset k−1; their product has superdiagonal q·a.
        """
        q = CongruenceLevel.coerce(q).q
        a = [int(x) for x in a]
        n = len(a) + 1
        if n < 3:
            raise PreconditionError(f"tridiagonal_cover needs n >= 3, got n = {n}.")
        covers = []
        for residue in (1, 2, 0):
            rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
            for i in range(1, n):
                if i % 3 == residue:
                    rows[i - 1][i] = q * a[i - 1]
            covers.append(SquareIntMatrix(rows))
        return tuple(covers)

    @staticmethod
    def superdiag_conjugator(g: SquareIntMatrix, g_prime: SquareIntMatrix, q) -> SquareIntMatrix:
        """
        Upper unitriangular h with h·g·h⁻¹ = g′, for g, g′ in U_n(Z;q) with every
        superdiagonal entry equal to q. Solves X·N − N′·X = N′ − N (h = I + X)
        one diagonal at a time, outward from the superdiagonal.
        """
        q = CongruenceLevel.coerce(q).q
        n = g.n
        for name, x in (('g', g), ("g'", g_prime)):
            if x.n != n or not M.in_U(x, q) or any(x.entry(i, i + 1) != q for i in range(1, n)):
                raise MembershipError(f"{name} must be in U_{n}(Z;{q}) with superdiagonal all {q}.")
        N = [[g.rows[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        Np = [[g_prime.rows[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        X = [[0] * n for _ in range(n)]
        for d in range(2, n + 1):
            # unknowns X[i][i+d-1]; the top one is free and set to 0
            for i in range(0, n - d):
                j = i + d
                known = sum(X[i][k] * N[k][j] for k in range(i + 1, j - 1)) \
                    - sum(Np[i][k] * X[k][j] for k in range(i + 2, j))
                rhs = Np[i][j] - N[i][j] - known
                if rhs % q:
                    raise CertificateError(f"Non-integral conjugator entry at ({i + 1},{j + 1}).")
                X[i + 1][j] = X[i][j - 1] - rhs // q
        h = SquareIntMatrix([[X[i][j] + (1 if i == j else 0) for j in range(n)] for i in range(n)])
        if h * g * h.inverse() != g_prime:
            raise CertificateError("Superdiagonal conjugator failed its identity check.")
        return h

    @staticmethod
    def standard_unipotent(n, q):
        """Product of the tridiagonal cover with all a_i = 1."""
        return M.product(ConstructionService.tridiagonal_cover(q, [1] * (n - 1)))

    @staticmethod
    def unipotent_capture(h: SquareIntMatrix, q) -> UnipotentCapture:
        q = CongruenceLevel.coerce(q).q
        n = h.n
        if not M.in_U(h, q):
            raise MembershipError(f"Input is not in U_{n}(Z;{q}).")
        a = [(q - h.entry(i, i + 1)) // q for i in range(1, n)]
        cover = ConstructionService.tridiagonal_cover(q, a)
        f = M.product(cover)
        fh = f * h
        standard = ConstructionService.standard_unipotent(n, q)
        conjugator = ConstructionService.superdiag_conjugator(fh, standard, q)
        if f.inverse() * fh != h:
            raise CertificateError("Unipotent capture does not reproduce its input.")
        return UnipotentCapture(h=h, f=f, f_cover=cover, fh=fh, standard=standard, conjugator=conjugator)

    @staticmethod
    def q_witness(w: Word) -> QWitness:
        """
        g = w(Sanov pair) placed in SL_3, h from the column group, and c with
        c·[g,h]·c⁻¹ = e_{1,3}(q).
        """
        if w.is_trivial():
            raise TrivialWordError(f"Word '{w}' is trivial; no witness exists.")
        A, B = WordService.sanov_pair()
        value = WordService.evaluate(w, WordService.free_tuple(w.arity))
        if M.is_scalar(value):
            raise CertificateError(f"Word value {value.format()} is central; the free pair should prevent this.")
        g = value.embed(3)
        g_inv = g.inverse()
        for v1, v2 in _COLUMN_CANDIDATES:
            h = SquareIntMatrix(((1, 0, v1), (0, 1, v2), (0, 0, 1)))
            commutator = g_inv * h.inverse() * g * h
            z1, z2 = commutator.entry(1, 3), commutator.entry(2, 3)
            if z1 or z2:
                break
        else:
            raise CertificateError("No column element gives a non-trivial commutator.")
        if commutator != SquareIntMatrix(((1, 0, z1), (0, 1, z2), (0, 0, 1))):
            raise CertificateError("Commutator left the column group.")
        q = gcd(z1, z2)
        s, t, _ = (int(x) for x in igcdex(z1, z2))
        conjugator = SquareIntMatrix(((s, t), (-z2 // q, z1 // q))).embed(3)
        if conjugator * commutator * conjugator.inverse() != M.elementary(3, 1, 3, q):
            raise CertificateError("Conjugation to e_{1,3}(q) failed.")
        logger.debug(f"q_witness for '{w}': q={q}")
        return QWitness(word=w, g=g, h=h, commutator=commutator, q=q, conjugator=conjugator)
