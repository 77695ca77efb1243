import random

from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from matrix_core.models import ModMatrix
from matrix_core.services import MatrixService
from words.services import WordService
from wordwidth.exceptions import BudgetExceededError, PreconditionError
from .lie import LieService
from .models import LieMatrix, SymSet
from .serializers import (
    ConjSumRequestSerializer, ConjSumResultSerializer, CoverCheckSerializer, WidthEstimateSerializer,
)
from .services import GroupTableService, ValueSetService

M = MatrixService
W = WordService.parse_word
_tables = {}


def table_for(n, m):
    if (n, m) not in _tables:
        _tables[(n, m)] = GroupTableService.enumerate_group(n, m)
    return _tables[(n, m)]


def conj_sum(A, conjugators):
    total = ModMatrix([[0] * A.n for _ in range(A.n)], A.modulus)
    for x in conjugators:
        total = total + x.inverse() * ModMatrix(A.rows, A.modulus) * x
    return total


def random_lie(n, p, rng):
    rows = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
    rows[n - 1][n - 1] = -sum(rows[i][i] for i in range(n - 1))
    return LieMatrix(rows, p)


class EnumerationTests(SimpleTestCase):

    def test_small_orders(self):
        self.assertEqual(len(table_for(2, 2)), 6)
        self.assertEqual(len(table_for(2, 3)), 24)
        self.assertEqual(len(table_for(3, 2)), 168)

    def test_order_formula_composite_modulus(self):
        self.assertEqual(GroupTableService.order_formula(2, 4), 48)
        self.assertEqual(GroupTableService.order_formula(2, 6), 6 * 24)
        self.assertEqual(len(GroupTableService.enumerate_group(2, 4)), 48)

    def test_budget(self):
        with self.assertRaises(BudgetExceededError) as ctx:
            GroupTableService.enumerate_group(3, 5, budget=1000)
        self.assertEqual(ctx.exception.exit_code, 2)

    def test_tree_words_lift(self):
        table = table_for(2, 3)
        for k in (1, 7, 23):
            self.assertEqual(table.lift(k).reduce(3).rows, table.element(k).rows)

    def test_center(self):
        table = table_for(2, 3)
        self.assertEqual(len(GroupTableService.center(table)), 2)

    def test_dump_and_load(self):
        table = table_for(2, 3)
        loaded = GroupTableService.load_table(GroupTableService.dump_table(table))
        self.assertEqual(loaded.elements, [tuple(e) for e in table.elements])
        X = ValueSetService.value_set(W("[x1,x2]"), table)
        back = GroupTableService.load_symset(GroupTableService.dump_symset(X), table)
        self.assertEqual(back, X)
        self.assertTrue(back.conjugation_invariant)

    def test_load_symset_rejects_other_group(self):
        X = SymSet.of(table_for(2, 2), [0])
        with self.assertRaises(PreconditionError):
            GroupTableService.load_symset(GroupTableService.dump_symset(X), table_for(2, 3))


class ValueSetTests(SimpleTestCase):

    def test_generator_word_hits_everything(self):
        self.assertEqual(len(ValueSetService.value_set(W("x1"), table_for(2, 3))), 24)

    def test_commutators_in_sl2_f2(self):
        X = ValueSetService.value_set(W("[x1,x2]"), table_for(2, 2))
        self.assertEqual(len(X), 3)
        self.assertEqual(ValueSetService.power_product(X, 1), X)

    def test_exponent_kills_everything(self):
        X = ValueSetService.value_set(W("x1^12"), table_for(2, 3))
        self.assertTrue(X.is_trivial())
        self.assertEqual(ValueSetService.width(W("x1^12"), table_for(2, 3)), 0)

    def test_symmetric_and_conjugation_closed(self):
        table = table_for(2, 3)
        X = ValueSetService.value_set(W("[x1,x2]"), table)
        self.assertTrue(X.is_symmetric())
        for k in X:
            for x in range(len(table)):
                self.assertIn(table.conjugate(k, x), X)

    def test_sampling_over_budget_is_flagged(self):
        table = table_for(2, 3)
        X = ValueSetService.value_set(W("[x1,x2]"), table, budget=100, samples=50, seed=3)
        self.assertTrue(X.approximate)
        self.assertTrue(X.issubset(ValueSetService.value_set(W("[x1,x2]"), table)))
        estimate = ValueSetService.width_estimate(W("[x1,x2]"), table, X)
        self.assertLessEqual(estimate.lower, estimate.upper)
        self.assertTrue(WidthEstimateSerializer(estimate).data['approximate'])


class PowerProductTests(SimpleTestCase):

    def test_zero_power(self):
        table = table_for(2, 3)
        X = ValueSetService.value_set(W("x1"), table)
        self.assertTrue(ValueSetService.power_product(X, 0).is_trivial())

    def test_identity_set(self):
        X = SymSet.of(table_for(2, 3), [0])
        self.assertEqual(len(ValueSetService.power_product(X, 5)), 1)

    def test_negative_power(self):
        with self.assertRaises(PreconditionError):
            ValueSetService.power_product(SymSet.of(table_for(2, 2), [0]), -1)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.integers(0, 23), min_size=1, max_size=3), st.integers(0, 4))
    def test_monotone(self, ordinals, k):
        X = SymSet.of(table_for(2, 3), ordinals)
        self.assertTrue(ValueSetService.power_product(X, k).issubset(ValueSetService.power_product(X, k + 1)))

    def test_class_counts(self):
        self.assertEqual(len(set(GroupTableService.conjugacy_classes(table_for(2, 3)))), 7)
        self.assertEqual(len(set(GroupTableService.conjugacy_classes(table_for(3, 2)))), 6)

    def test_class_walk_matches_element_walk(self):
        rng = random.Random(3)
        for n, m in ((2, 3), (2, 5), (3, 2)):
            table = table_for(n, m)
            for _ in range(5):
                X = GroupTableService.conjugation_closure(table, [rng.randrange(1, len(table))])
                self.assertEqual(ValueSetService.closure_exponent(X), len(ValueSetService._layers(X)))


class WidthTests(SimpleTestCase):

    def test_generator_word(self):
        self.assertEqual(ValueSetService.width(W("x1"), table_for(2, 5)), 1)

    def test_commutator_sl2_f2(self):
        self.assertEqual(ValueSetService.width(W("[x1,x2]"), table_for(2, 2)), 1)

    def test_commutator_sl2_f5(self):
        table = table_for(2, 5)
        X = ValueSetService.value_set(W("[x1,x2]"), table)
        width = ValueSetService.closure_exponent(X)
        self.assertGreaterEqual(width, 1)
        self.assertLessEqual(width, 3)
        closure = GroupTableService.subgroup_closure(table, list(X))
        self.assertEqual(ValueSetService.power_product(X, width), closure)
        self.assertNotEqual(ValueSetService.power_product(X, width - 1), closure)
        estimate = ValueSetService.width_estimate(W("[x1,x2]"), table, X)
        self.assertTrue(estimate.exact)
        self.assertEqual(estimate.closure_size, 120)

    def test_closure_exponent_whole_group(self):
        table = table_for(2, 3)
        self.assertEqual(ValueSetService.closure_exponent(SymSet.of(table, range(len(table)))), 1)

    def test_closure_exponent_cyclic(self):
        table = table_for(2, 5)
        X = SymSet.of(table, [table.ordinal(M.elementary(2, 1, 2, 1))])
        self.assertEqual(ValueSetService.closure_exponent(X), 2)

    def test_closure_exponent_needs_symmetry(self):
        table = table_for(2, 5)
        X = SymSet.of(table, [table.ordinal(M.elementary(2, 1, 2, 1))], symmetrize=False)
        with self.assertRaises(PreconditionError):
            ValueSetService.closure_exponent(X)


class CoverTests(SimpleTestCase):

    def test_whole_group_is_one_translate(self):
        table = table_for(2, 3)
        self.assertEqual(ValueSetService.greedy_cover(SymSet.of(table, range(len(table)))), 1)

    def test_small_set(self):
        table = table_for(2, 3)
        X = SymSet.of(table, [0, table.ordinal(M.elementary(2, 1, 2, 1))])
        self.assertLessEqual(ValueSetService.greedy_cover(X), len(table))

    def test_empty_set(self):
        with self.assertRaises(PreconditionError):
            ValueSetService.greedy_cover(SymSet.empty(table_for(2, 3)))

    def test_translate_cover_bound(self):
        X = ValueSetService.value_set(W("[x1,x2]"), table_for(2, 3))
        check = ValueSetService.translate_cover_check(X)
        self.assertTrue(check.holds)
        self.assertEqual(check.bound, 4 * check.parameter + 2)
        self.assertEqual(CoverCheckSerializer(check).data['bound'], check.bound)

    def test_subgroup_index_bound(self):
        table = table_for(2, 3)
        K = GroupTableService.center(table)
        H = SymSet.of(table, range(len(table)))
        X = GroupTableService.conjugation_closure(table, [table.ordinal(M.elementary(2, 1, 2, 1))]).union(K)
        check = ValueSetService.subgroup_index_check(X, H, K)
        self.assertEqual(check.parameter, 12)
        self.assertTrue(check.holds)

    def test_subgroup_index_needs_k_in_x(self):
        table = table_for(2, 3)
        K = GroupTableService.center(table)
        H = SymSet.of(table, range(len(table)))
        X = GroupTableService.conjugation_closure(table, [table.ordinal(M.elementary(2, 1, 2, 1))])
        with self.assertRaises(PreconditionError):
            ValueSetService.subgroup_index_check(X, H, K)

    def test_translate_cover_batch(self):
        rng = random.Random(11)
        tables = [table_for(2, 3), table_for(2, 5), table_for(3, 2), table_for(2, 7)]
        for _ in range(50):
            table = rng.choice(tables)
            X = SymSet.of(table, rng.sample(range(1, len(table)), rng.randint(1, 6)))
            check = ValueSetService.translate_cover_check(X)
            self.assertTrue(check.holds)
            closure = GroupTableService.subgroup_closure(table, list(X))
            self.assertEqual(ValueSetService.power_product(X, check.bound), closure)


class GenerationTests(SimpleTestCase):

    def test_identity_pair(self):
        self.assertFalse(GroupTableService.generates(0, 0, table_for(2, 3)))

    def test_opposite_elementaries(self):
        table = table_for(2, 5)
        a = table.ordinal(M.elementary(2, 1, 2, 1))
        b = table.ordinal(M.elementary(2, 2, 1, 1))
        self.assertTrue(GroupTableService.generates(a, b, table))

    def test_abelian_pair(self):
        table = table_for(2, 5)
        self.assertFalse(GroupTableService.generates(M.elementary(2, 1, 2, 1), M.elementary(2, 1, 2, 2), table))


class DiffRankTests(SimpleTestCase):

    def test_identity_pair(self):
        identity = ModMatrix.identity(3, 5)
        self.assertEqual(LieService.diff_rank(identity, identity), 0)

    def test_central_pair(self):
        central = ModMatrix([[2, 0, 0], [0, 2, 0], [0, 0, 2]], 7)
        self.assertEqual(LieService.diff_rank(central, central), 0)

    def test_generating_pair_is_onto(self):
        table = table_for(3, 2)
        a = ModMatrix(M.elementary(3, 1, 2, 1).rows, 2)
        b = ModMatrix([[0, 0, 1], [1, 0, 0], [0, 1, 0]], 2)
        self.assertTrue(GroupTableService.generates(table.ordinal(a), table.ordinal(b), table))
        self.assertEqual(LieService.diff_rank(a, b), 8)

    def test_bracket_rank(self):
        H = LieMatrix([[1, 0], [0, 4]], 5)
        E = LieMatrix.unit(2, 5, 1, 2)
        self.assertEqual(LieService.bracket_rank(H, E), 3)
        zero = LieMatrix([[0, 0], [0, 0]], 5)
        self.assertEqual(LieService.bracket_rank(zero, zero), 0)

    def test_basis_size(self):
        self.assertEqual(len(LieService.sl_basis(4, 3)), 15)

    def test_random_generating_pairs(self):
        rng = random.Random(7)
        for p in (2, 3):
            table = table_for(3, p)
            found = 0
            while found < 100:
                a, b = rng.randrange(len(table)), rng.randrange(len(table))
                if not GroupTableService.generates(a, b, table):
                    continue
                found += 1
                self.assertEqual(LieService.diff_rank(table.element(a), table.element(b)), 8)

    def test_generating_pairs_mod_five(self):
        # Nielsen moves and conjugation keep (e12, cycle) a generating pair of SL_3(F_5)
        rng = random.Random(8)
        p = 5
        for _ in range(100):
            a = ModMatrix(M.elementary(3, 1, 2, 1).rows, p)
            b = ModMatrix([[0, 0, 1], [1, 0, 0], [0, 1, 0]], p)
            for _ in range(20):
                move = rng.randrange(5)
                if move == 0:
                    a = a * b
                elif move == 1:
                    a = a * b.inverse()
                elif move == 2:
                    b = b * a
                elif move == 3:
                    b = b * a.inverse()
                else:
                    a, b = b, a
            x = ModMatrix.identity(3, p)
            for _ in range(12):
                i, j = rng.sample((1, 2, 3), 2)
                x = x * ModMatrix(M.elementary(3, i, j, rng.randrange(1, p)).rows, p)
            a, b = x.inverse() * a * x, x.inverse() * b * x
            self.assertEqual(LieService.diff_rank(a, b), 8)


class FiniteFieldTests(SimpleTestCase):

    def test_two_squares(self):
        self.assertEqual(LieService.two_squares(0, 7), (0, 0))
        self.assertEqual(LieService.two_squares(3, 7), (1, 3))
        self.assertEqual(LieService.two_squares(1, 5), (1, 0))
        self.assertEqual(LieService.two_squares(3, 5), (2, 2))

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([3, 5, 7, 11, 13, 101]), st.integers(0, 200))
    def test_two_squares_sum(self, p, c):
        x, y = LieService.two_squares(c, p)
        self.assertEqual((x * x + y * y - c) % p, 0)

    def test_curve_point_17(self):
        self.assertEqual(LieService.curve_point(17), (5, 5, 1))

    def test_curve_point_19(self):
        point = LieService.curve_point(19)
        self.assertIsNotNone(point)
        self.assertEqual(sum(t * t for t in point) % 19, 0)
        self.assertNotEqual(sum(pow(t * t, -1, 19) for t in point) % 19, 0)
        self.assertTrue(all(point))

    def test_curve_point_small_prime_warns(self):
        with self.assertLogs('finite_lab.lie', level='WARNING'):
            point = LieService.curve_point(13)
        if point is not None:
            self.assertEqual(sum(t * t for t in point) % 13, 0)


class ConjSumTests(SimpleTestCase):

    def test_same_matrix(self):
        A = LieMatrix.unit(3, 7, 1, 2)
        result = LieService.conj_sum_decompose(A, A)
        self.assertEqual(result.length, 1)
        self.assertTrue(result.conjugators[0].is_identity())

    def test_zero_target(self):
        A = LieMatrix.unit(3, 7, 1, 2)
        self.assertEqual(LieService.conj_sum_decompose(A, LieMatrix.unit(3, 7, 1, 2, 0)).length, 0)

    def test_rank_one_scaling(self):
        A = LieMatrix.unit(2, 5, 1, 2)
        result = LieService.conj_sum_decompose(A, LieMatrix.unit(2, 5, 1, 2, 3))
        self.assertEqual(result.length, 2)
        self.assertEqual([x.rows for x in result.conjugators], [((3, 0), (0, 2))] * 2)
        self.assertEqual(result.strategy, 'rank-one')

    def test_nilpotent_within_bound(self):
        rng = random.Random(11)
        A = LieMatrix([[0, 1, 0], [0, 0, 1], [0, 0, 0]], 7)
        for _ in range(5):
            B = random_lie(3, 7, rng)
            result = LieService.conj_sum_decompose(A, B)
            self.assertEqual(conj_sum(A, result.conjugators).rows, B.rows)
            self.assertLessEqual(result.length, 2 * (3 * 3 - 1) * 2)
            self.assertIn('jordan', result.strategy)

    def test_random_pairs(self):
        rng = random.Random(5)
        for n, p in ((2, 19), (4, 5)):
            A = random_lie(n, p, rng)
            if A.is_scalar():
                continue
            B = random_lie(n, p, rng)
            result = LieService.conj_sum_decompose(A, B)
            self.assertEqual(conj_sum(A, result.conjugators).rows, B.rows)
            self.assertLessEqual(result.length, result.bound)
            self.assertTrue(all(x.det == 1 for x in result.conjugators))

    def test_random_batch(self):
        rng = random.Random(2024)
        for p in (5, 7, 11, 13):
            for n in (2, 3):
                for _ in range(100):
                    A = random_lie(n, p, rng)
                    while A.is_scalar():
                        A = random_lie(n, p, rng)
                    B = random_lie(n, p, rng)
                    result = LieService.conj_sum_decompose(A, B)
                    self.assertEqual(conj_sum(A, result.conjugators).rows, B.rows)
                    self.assertLessEqual(result.length, result.bound)

    def test_characteristic_two_uses_spanning_set(self):
        A = LieMatrix.unit(2, 2, 1, 2)
        B = LieMatrix.unit(2, 2, 2, 1)
        result = LieService.conj_sum_decompose(A, B, table=table_for(2, 2))
        self.assertEqual(result.strategy, 'spanning')
        self.assertEqual(conj_sum(A, result.conjugators).rows, B.rows)

    def test_scalar_rejected(self):
        with self.assertRaises(PreconditionError):
            LieService.conj_sum_decompose(LieMatrix([[0, 0], [0, 0]], 5), LieMatrix.unit(2, 5, 1, 2))

    def test_serialized_result(self):
        A = LieMatrix.unit(2, 5, 1, 2)
        data = ConjSumResultSerializer(LieService.conj_sum_decompose(A, LieMatrix.unit(2, 5, 1, 2, 3))).data
        self.assertEqual(data['length'], 2)
        self.assertEqual(data['conjugators'][0], {'matrix': '3,0;0,2', 'modulus': 5})

    def test_request_needs_trace_zero(self):
        serializer = ConjSumRequestSerializer(data={'a': '1,0;0,1', 'b': '0,1;0,0', 'p': 5})
        self.assertFalse(serializer.is_valid())
        self.assertIn('a', serializer.errors)
        serializer = ConjSumRequestSerializer(data={'a': '1,0;0,4', 'b': '0,1;0,0', 'p': 5})
        self.assertTrue(serializer.is_valid(), serializer.errors)
