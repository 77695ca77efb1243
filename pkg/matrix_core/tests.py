from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from wordwidth.exceptions import DimensionMismatchError, MatrixFormatError, NotUnimodularError, PreconditionError
from .models import CongruenceLevel, ModMatrix, SquareIntMatrix, TruncatedPadicMatrix
from .services import MatrixService, ModularLinearAlgebra

M = MatrixService


def level_words(n, q, max_len=8):
    """Random products of level-q elementary matrices in SL_n(Z)."""
    letter = st.tuples(
        st.integers(1, n), st.integers(1, n), st.integers(-3, 3)
    ).filter(lambda t: t[0] != t[1])
    return st.lists(letter, max_size=max_len).map(
        lambda word: M.product([M.elementary(n, i, j, q * x) for i, j, x in word], n)
    )


class MatrixArithmeticTests(SimpleTestCase):

    def test_identity_product(self):
        identity = SquareIntMatrix.identity(3)
        self.assertEqual(M.mat_mul(identity, identity), identity)

    def test_elementary_inverse_pair(self):
        self.assertEqual(M.mat_mul(M.elementary(3, 1, 2, 3), M.elementary(3, 1, 2, -3)), SquareIntMatrix.identity(3))

    def test_elementary_product_fills_corner(self):
        g = M.mat_mul(M.elementary(3, 1, 2, 1), M.elementary(3, 2, 3, 1))
        self.assertEqual(g, SquareIntMatrix.parse("1,1,1;0,1,1;0,0,1"))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            M.mat_mul(SquareIntMatrix.identity(2), SquareIntMatrix.identity(3))

    def test_inverse_by_adjugate(self):
        self.assertEqual(M.mat_inv(SquareIntMatrix.parse("2,1;1,1")), SquareIntMatrix.parse("1,-1;-1,2"))
        self.assertEqual(M.mat_inv(M.elementary(4, 2, 4, 9)), M.elementary(4, 2, 4, -9))

    def test_inverse_rejects_non_unimodular(self):
        with self.assertRaises(NotUnimodularError):
            M.mat_inv(SquareIntMatrix.parse("2,0;0,1"))

    def test_elementary_examples(self):
        self.assertEqual(M.elementary(3, 1, 2, 0), SquareIntMatrix.identity(3))
        self.assertEqual(M.elementary(3, 1, 3, 5).entry(1, 3), 5)
        self.assertEqual(M.elementary(2, 2, 1, -7), SquareIntMatrix.parse("1,0;-7,1"))
        with self.assertRaises(PreconditionError):
            M.elementary(3, 2, 2, 1)

    def test_text_format(self):
        g = SquareIntMatrix.parse(" 1, -2 ; 0,1 ")
        self.assertEqual(g.format(), "1,-2;0,1")
        with self.assertRaises(MatrixFormatError):
            SquareIntMatrix.parse("1,2;3")
        with self.assertRaises(MatrixFormatError):
            SquareIntMatrix.parse("1,x;0,1")

    def test_determinant_with_large_entries(self):
        big = 10 ** 40
        g = M.elementary(3, 1, 3, big) * M.elementary(3, 3, 2, -big) * M.elementary(3, 2, 1, big)
        self.assertEqual(g.det, 1)
        self.assertTrue(g.is_unimodular())
        self.assertFalse(SquareIntMatrix(((2, 0), (0, 1))).is_unimodular())

    @settings(max_examples=40, deadline=None)
    @given(level_words(4, 1))
    def test_inverse_round_trip(self, g):
        self.assertTrue(M.mat_mul(g, M.mat_inv(g)).is_identity())


class MembershipTests(SimpleTestCase):

    def test_congruence_examples(self):
        self.assertTrue(M.in_congruence(SquareIntMatrix.identity(3), 5))
        self.assertTrue(M.in_congruence(M.elementary(3, 1, 2, 5), 5))
        self.assertFalse(M.in_congruence(M.elementary(3, 1, 2, 3), 5))

    def test_unipotent_examples(self):
        self.assertTrue(M.in_U(SquareIntMatrix.identity(3), 3))
        self.assertTrue(M.in_U(M.elementary(3, 1, 2, 6), 3))
        self.assertFalse(M.in_U(M.elementary(3, 2, 1, 6), 3))
        self.assertTrue(M.in_L(M.elementary(3, 2, 1, 6), 3))

    def test_level_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            CongruenceLevel(0)

    def test_mennicke_examples(self):
        q = 2
        self.assertTrue(M.mennicke_in_E(M.elementary(3, 1, 2, q), q))
        self.assertTrue(M.mennicke_in_E(SquareIntMatrix.identity(3), q))
        block = SquareIntMatrix.parse("1,1;0,1") * SquareIntMatrix.parse("1,0;2,1") * SquareIntMatrix.parse("1,-1;0,1")
        g = block.embed(3)
        self.assertEqual(g, SquareIntMatrix.parse("3,-2,0;2,-1,0;0,0,1"))
        self.assertFalse(M.mennicke_in_E(g, q))
        fields = [d["field"] for d in M.mennicke_violations(g, q)]
        self.assertEqual(fields, ["(1,1)", "(2,2)"])

    def test_mennicke_needs_three_rows(self):
        with self.assertRaises(PreconditionError):
            M.mennicke_in_E(SquareIntMatrix.identity(2), 2)

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from([1, 2, 3]), st.data())
    def test_unipotent_group_is_closed(self, q, data):
        def upper(x):
            return M.product([M.elementary(4, i, j, q * c) for i, j, c in x], 4)
        letters = st.lists(
            st.tuples(st.integers(1, 3), st.integers(2, 4), st.integers(-5, 5)).filter(lambda t: t[0] < t[1]),
            max_size=6,
        )
        a = upper(data.draw(letters))
        b = upper(data.draw(letters))
        self.assertTrue(M.in_U(a * b, q))
        self.assertTrue(M.in_U(M.mat_inv(a), q))
        self.assertTrue(M.in_congruence(a, q))

    @settings(max_examples=60, deadline=None)
    @given(level_words(3, 2), level_words(3, 2))
    def test_mennicke_group_on_level_words(self, a, b):
        self.assertTrue(M.mennicke_in_E(a, 2))
        self.assertTrue(M.mennicke_in_E(a * b, 2))
        self.assertTrue(M.mennicke_in_E(M.mat_inv(b), 2))

    @settings(max_examples=60, deadline=None)
    @given(level_words(3, 1), st.integers(1, 3), st.integers(1, 3), st.integers(-4, 4))
    def test_mennicke_matches_diagonal_inspection(self, h, i, j, shift):
        if i == j:
            j = i % 3 + 1
        q = 3
        g = h * M.elementary(3, i, j, q + q * shift) * M.mat_inv(h)
        expected = all((g.entry(k, k) - 1) % (q * q) == 0 for k in range(1, 4))
        self.assertEqual(M.mennicke_in_E(g, q), expected)


class ReductionTests(SimpleTestCase):

    def test_reduce_examples(self):
        self.assertEqual(M.reduce_mod(M.elementary(2, 1, 2, 5), 5), ModMatrix.identity(2, 5))
        self.assertEqual(M.reduce_mod(SquareIntMatrix.identity(2), 7), ModMatrix.identity(2, 7))
        self.assertEqual(M.reduce_mod(SquareIntMatrix.parse("2,1;1,1"), 2).rows, ((0, 1), (1, 1)))

    @settings(max_examples=40, deadline=None)
    @given(level_words(3, 1), level_words(3, 1), st.integers(2, 30))
    def test_reduction_is_a_homomorphism(self, a, b, m):
        self.assertEqual(M.reduce_mod(a * b, m), M.reduce_mod(a, m) * M.reduce_mod(b, m))
        self.assertEqual(M.reduce_mod(a, m).det, a.det % m)

    def test_mod_inverse(self):
        g = ModMatrix.from_flat((2, 1, 1, 1), 2, 7)
        self.assertTrue((g * g.inverse()).is_identity())

    def test_truncated_padic_keeps_precision(self):
        g = TruncatedPadicMatrix.of(((1, 3), (0, 1)), 3, 2)
        h = g * g
        self.assertIsInstance(h, TruncatedPadicMatrix)
        self.assertEqual(h.rows, ((1, 6), (0, 1)))
        self.assertEqual(h.reduce_precision(1).rows, ((1, 0), (0, 1)))


class ModularSolverTests(SimpleTestCase):

    def test_identity_system(self):
        self.assertEqual(ModularLinearAlgebra.solve([[1, 0], [0, 1]], [5, 7], 3, 2), [5, 7])

    def test_scaled_identity(self):
        self.assertEqual(ModularLinearAlgebra.solve([[3, 0], [0, 3]], [6, 3], 3, 3), [2, 1])

    def test_inconsistent_system(self):
        self.assertIsNone(ModularLinearAlgebra.solve([[3]], [1], 3, 2))
        self.assertIsNone(ModularLinearAlgebra.solve([[1], [1]], [0, 1], 5, 1))

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([2, 3, 5]), st.integers(1, 3), st.data())
    def test_solution_substitutes(self, p, K, data):
        mod = p ** K
        t = data.draw(st.integers(1, 4))
        s = data.draw(st.integers(1, 5))
        A = data.draw(st.lists(st.lists(st.integers(0, mod - 1), min_size=s, max_size=s), min_size=t, max_size=t))
        x = data.draw(st.lists(st.integers(0, mod - 1), min_size=s, max_size=s))
        v = ModularLinearAlgebra.apply(A, x, mod)
        eps = ModularLinearAlgebra.solve(A, v, p, K)
        self.assertIsNotNone(eps)
        self.assertEqual(ModularLinearAlgebra.apply(A, eps, mod), v)

    def test_rank_mod_p(self):
        self.assertEqual(ModularLinearAlgebra.rank_mod_p([[1, 2], [2, 4]], 5), 1)
        self.assertEqual(ModularLinearAlgebra.rank_mod_p([[1, 2], [2, 4]], 2), 1)
        self.assertEqual(ModularLinearAlgebra.rank_mod_p([[1, 0], [0, 1]], 3), 2)
