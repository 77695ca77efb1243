from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from matrix_core.models import ModMatrix, SquareIntMatrix
from matrix_core.services import MatrixService
from wordwidth.exceptions import BudgetExceededError, PreconditionError, WordSyntaxError
from .models import GroupOps, Word
from .services import WordService

W = WordService

letters = st.lists(st.tuples(st.integers(1, 3), st.sampled_from([1, -1])), max_size=12)
words = letters.map(Word)


class ParseWordTests(SimpleTestCase):

    def test_power(self):
        self.assertEqual(W.parse_word("x1^2").letters, ((1, 1), (1, 1)))

    def test_exponent_limit(self):
        with self.assertRaises(BudgetExceededError):
            W.parse_word("x1^1000000000")
        with self.assertRaises(BudgetExceededError):
            W.parse_word("x1^-" + "9" * 5000)
        with self.assertRaises(BudgetExceededError):
            Word(((1, 1),)).power(10 ** 9)
        self.assertEqual(len(W.parse_word("x1^100000").letters), 100000)

    def test_commutator_convention(self):
        self.assertEqual(W.parse_word("[x1,x2]").format(), "x1^-1 x2^-1 x1 x2")

    def test_free_reduction(self):
        self.assertTrue(W.parse_word("x1 x1^-1").is_trivial())
        self.assertTrue(W.parse_word("x2^0").is_trivial())

    def test_juxtaposition_groups_and_nesting(self):
        self.assertEqual(W.parse_word("x1x2"), W.parse_word("x1 x2"))
        self.assertEqual(W.parse_word("(x1 x2)^-1"), W.parse_word("x2^-1 x1^-1"))
        nested = W.parse_word("[x1,[x2,x3]]")
        self.assertEqual(nested.arity, 3)
        self.assertEqual(len(nested), 10)

    def test_syntax_errors_carry_position(self):
        for text, position in (("x0", 1), ("x1^", 3), ("[x1 x2]", 6), ("x1 ]", 3)):
            with self.assertRaises(WordSyntaxError) as ctx:
                W.parse_word(text)
            self.assertEqual(ctx.exception.position, position)

    def test_canonical_text_reparses(self):
        w = W.parse_word("[x1^2, x2] x3")
        self.assertEqual(W.parse_word(w.format()), w)


class EvaluateTests(SimpleTestCase):

    def test_square_of_unipotent(self):
        a = MatrixService.elementary(2, 1, 2, 1)
        self.assertEqual(W.evaluate(W.parse_word("x1^2"), [a]), MatrixService.elementary(2, 1, 2, 2))

    def test_commutator_with_identity(self):
        g = SquareIntMatrix.parse("2,1;1,1")
        value = W.evaluate(W.parse_word("[x1,x2]"), [g, SquareIntMatrix.identity(2)])
        self.assertTrue(value.is_identity())

    def test_commutator_of_elementaries(self):
        g = MatrixService.elementary(3, 1, 2, 4)
        h = MatrixService.elementary(3, 2, 3, 1)
        self.assertEqual(W.evaluate(W.parse_word("[x1,x2]"), [g, h]), MatrixService.elementary(3, 1, 3, 4))

    def test_empty_word_is_identity(self):
        self.assertTrue(W.evaluate(Word(), [SquareIntMatrix.parse("2,1;1,1")]).is_identity())

    def test_empty_tuple_needs_ops(self):
        with self.assertRaises(PreconditionError):
            W.evaluate(Word(), [])
        ops = GroupOps(mul=lambda a, b: (a + b) % 7, inv=lambda a: (-a) % 7, identity=0)
        self.assertEqual(W.evaluate(Word(), [], ops), 0)

    def test_tuple_too_short(self):
        with self.assertRaises(PreconditionError):
            W.evaluate(W.parse_word("x1 x2"), [SquareIntMatrix.identity(2)])

    def test_explicit_ops(self):
        ops = GroupOps(mul=lambda a, b: (a + b) % 7, inv=lambda a: (-a) % 7, identity=0)
        self.assertEqual(W.evaluate(W.parse_word("x1^3 x2^-1"), [2, 5], ops), 1)

    def test_mod_matrix_elements(self):
        a = ModMatrix.from_flat((1, 1, 0, 1), 2, 3)
        self.assertTrue(W.evaluate(W.parse_word("x1^3"), [a]).is_identity())

    @settings(max_examples=60, deadline=None)
    @given(words, words)
    def test_concatenation_is_product(self, u, v):
        A, B = W.sanov_pair()
        t = [A, B, A * B]
        self.assertEqual(W.evaluate(u * v, t), W.evaluate(u, t) * W.evaluate(v, t))

    @settings(max_examples=40, deadline=None)
    @given(words)
    def test_unused_generators_ignored(self, w):
        A, B = W.sanov_pair()
        t = [A, B, B * A]
        self.assertEqual(W.evaluate(w, t), W.evaluate(w, t + [A * A]))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 2), st.sampled_from([1, -1])), max_size=14).map(Word))
    def test_sanov_pair_detects_nontrivial_words(self, w):
        value = W.evaluate(w, list(W.sanov_pair()))
        self.assertEqual(value.is_identity(), W.is_trivial_on_free(w))


class TrivialityTests(SimpleTestCase):

    def test_examples(self):
        self.assertTrue(W.is_trivial_on_free(W.parse_word("x1 x1^-1")))
        self.assertFalse(W.is_trivial_on_free(W.parse_word("[x1,x2]")))
        self.assertFalse(W.is_trivial_on_free(W.parse_word("x1^3")))
