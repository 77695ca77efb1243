import dataclasses
import math
import random

from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from finite_lab.models import SymSet
from finite_lab.services import GroupTableService
from matrix_core.models import ModMatrix, SquareIntMatrix, TruncatedPadicMatrix
from matrix_core.services import MatrixService
from words.services import WordService
from wordwidth.exceptions import CertificateError, PreconditionError, RankDeficiencyError
from .models import PolyMapDescriptor
from .serializers import LiftCertificateSerializer, NewtonResultSerializer, WidthBoundReportSerializer
from .services import CoverService, GroupNewtonService, PadicService
from .tasks import lift_sample_task

M = MatrixService
P = PadicService
W = WordService.parse_word
_tables = {}


def table_for(n, m):
    if (n, m) not in _tables:
        _tables[(n, m)] = GroupTableService.enumerate_group(n, m)
    return _tables[(n, m)]


def truncated(g, p, K):
    return TruncatedPadicMatrix.of(g.rows, p, K)


def random_sl(n, p, K, rng, level=1):
    g = M.product(
        [M.elementary(n, *rng.sample(range(1, n + 1), 2), level * rng.randrange(p ** K)) for _ in range(2 * n * n)],
        n,
    )
    return truncated(g, p, K)


# e_{1,2}(1) and a 3-cycle generate SL_3(F_2)
G3 = M.elementary(3, 1, 2, 1)
H3 = SquareIntMatrix(((0, 0, 1), (1, 0, 0), (0, 1, 0)))


class ValuationTests(SimpleTestCase):

    def test_single_polynomial(self):
        self.assertEqual(P.pval(PolyMapDescriptor.from_exprs(["9*x + 3*x*y**2"], ["x", "y"]), 3), 1)

    def test_unit_coefficient(self):
        self.assertEqual(P.pval(PolyMapDescriptor.from_exprs(["x + y"], ["x", "y"]), 5), 0)

    def test_componentwise_minimum(self):
        self.assertEqual(P.pval(PolyMapDescriptor.from_exprs(["25*x", "5*y"], ["x", "y"]), 5), 1)

    def test_zero_map(self):
        self.assertEqual(P.pval(PolyMapDescriptor.from_exprs(["0", "0"], ["x"]), 5), math.inf)

    def test_not_a_polynomial(self):
        with self.assertRaises(PreconditionError):
            PolyMapDescriptor.from_exprs(["1/x"], ["x"])


class LinearSolveTests(SimpleTestCase):

    def test_identity(self):
        I = [[1 if i == j else 0 for j in range(3)] for i in range(3)]
        self.assertEqual(P.linear_solve_mod(I, [4, 7, 26], 3, 3), [4, 7, 26])

    def test_scaled_identity(self):
        pI = [[3 if i == j else 0 for j in range(2)] for i in range(2)]
        self.assertEqual(P.linear_solve_mod(pI, [3 * 5, 3 * 2], 3, 3), [5, 2])

    def test_divisibility_constraint(self):
        I = [[1, 0], [0, 1]]
        self.assertEqual(P.linear_solve_mod(I, [6, 3], 3, 2, min_valuation=1), [6, 3])
        self.assertIsNone(P.linear_solve_mod(I, [1, 3], 3, 2, min_valuation=1))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_wide_system_by_substitution(self, seed):
        rng = random.Random(seed)
        p, K = 3, 4
        mod = p ** K
        A = [[rng.randrange(mod) for _ in range(16)] for _ in range(8)]
        x0 = [rng.randrange(mod) for _ in range(16)]
        v = [sum(a * x for a, x in zip(row, x0)) % mod for row in A]
        e = P.linear_solve_mod(A, v, p, K)
        self.assertIsNotNone(e)
        self.assertEqual([sum(a * x for a, x in zip(row, e)) % mod for row in A], v)


class NewtonLiftTests(SimpleTestCase):

    def test_square_root_of_seven(self):
        f = PolyMapDescriptor.from_exprs(["x**2"], ["x"])
        result = P.newton_lift(f, [1], [7], 3, 0, 5)
        self.assertEqual(result.point, (175,))
        self.assertEqual(result.trace, ((1,), (4,), (13,), (175,)))
        self.assertEqual(result.valuations, (1, 2, 4, 5))
        self.assertEqual(NewtonResultSerializer(result).data['iterations'], 3)

    def test_identity_map(self):
        f = PolyMapDescriptor.from_exprs(["x", "y"], ["x", "y"])
        self.assertEqual(P.newton_lift(f, [2, 1], [17, 40], 3, 0, 4).point, (17, 40))

    def test_recovers_exact_root(self):
        f = PolyMapDescriptor.from_exprs(["x**2"], ["x"])
        self.assertEqual(P.newton_lift(f, [2], [49], 5, 0, 3).point, (7,))

    def test_divisible_map(self):
        f = PolyMapDescriptor.from_exprs(["3*x + 9*x**2"], ["x"])
        result = P.newton_lift(f, [0], [18], 3, 1, 4)
        self.assertEqual(result.point, (6,))
        self.assertEqual(f.evaluate(list(result.point), 81), [18])

    def test_rank_deficiency(self):
        f = PolyMapDescriptor.from_exprs(["x**2"], ["x"])
        with self.assertRaises(RankDeficiencyError) as ctx:
            P.newton_lift(f, [0], [9], 3, 0, 4)
        self.assertEqual(ctx.exception.rank, 0)

    def test_start_too_far(self):
        f = PolyMapDescriptor.from_exprs(["x**2"], ["x"])
        with self.assertRaises(PreconditionError):
            P.newton_lift(f, [1], [2], 3, 0, 3)

    def test_valuation_below_k(self):
        with self.assertRaises(PreconditionError):
            P.newton_lift(PolyMapDescriptor.from_exprs(["x"], ["x"]), [0], [0], 3, 1, 3)


class PhiMapTests(SimpleTestCase):
    p, K = 3, 2

    def setUp(self):
        self.g = truncated(M.elementary(2, 1, 2, 1), self.p, self.K)
        self.h = truncated(M.elementary(2, 2, 1, 4), self.p, self.K)
        self.phi = P.phi_map(self.g, self.h)

    def test_identity_point(self):
        identity = ModMatrix.identity(2, 9)
        self.assertEqual(self.phi.evaluate(list(identity.flat + identity.flat), 9), list((self.g * self.h).flat))

    def test_trivial_pair_is_constant_on_sl(self):
        identity = truncated(M.elementary(2, 1, 2, 0), self.p, self.K)
        phi = P.phi_map(identity, identity)
        rng = random.Random(4)
        for _ in range(5):
            x, y = random_sl(2, 3, 2, rng), random_sl(2, 3, 2, rng)
            self.assertEqual(phi.evaluate(list(x.flat + y.flat), 9), [1, 0, 0, 1])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_matches_group_arithmetic(self, seed):
        rng = random.Random(seed)
        x, y = random_sl(2, 3, 2, rng), random_sl(2, 3, 2, rng)
        direct = x.inverse() * self.g * x * y.inverse() * self.h * y
        self.assertEqual(self.phi.evaluate(list(x.flat + y.flat), 9), list(direct.flat))


class GroupNewtonTests(SimpleTestCase):

    def test_lifts_coset_target(self):
        p, K = 2, 3
        g, h = truncated(G3, p, K), truncated(H3, p, K)
        target = g * h * truncated(M.elementary(3, 1, 3, 2) * M.elementary(3, 2, 1, 4), p, K)
        lifted = GroupNewtonService.lift_pair(g, h, target, p, K)
        self.assertEqual((lifted.x.inverse() * g * lifted.x * lifted.y.inverse() * h * lifted.y).rows, target.rows)
        self.assertEqual(list(lifted.valuations), sorted(set(lifted.valuations)))
        self.assertEqual(lifted.valuations[-1], K)

    def test_target_outside_coset(self):
        p, K = 2, 3
        g, h = truncated(G3, p, K), truncated(H3, p, K)
        with self.assertRaises(PreconditionError):
            GroupNewtonService.lift_pair(g, h, truncated(M.elementary(3, 2, 3, 1), p, K), p, K)

    def test_central_pair_is_rank_deficient(self):
        p, K = 2, 3
        identity = truncated(M.elementary(3, 1, 2, 0), p, K)
        with self.assertRaises(RankDeficiencyError):
            GroupNewtonService.lift_pair(identity, identity, truncated(M.elementary(3, 1, 2, 2), p, K), p, K)

    def test_task_payload(self):
        payload = {
            'g': G3.format(), 'h': H3.format(),
            'target': (G3 * H3 * M.elementary(3, 3, 2, 2)).format(), 'p': 2, 'K': 2,
        }
        result = lift_sample_task.delay(payload).get()
        self.assertEqual(result['valuations'][-1], 2)

    def test_task_reports_errors(self):
        payload = {'g': G3.format(), 'h': H3.format(), 'target': M.elementary(3, 2, 3, 1).format(), 'p': 2, 'K': 2}
        result = lift_sample_task.delay(payload).get()
        self.assertEqual(result['error']['error']['code'], 'PRECONDITION_FAILED')


class CoverTests(SimpleTestCase):

    def test_primitive_word(self):
        certificate = CoverService.word_coset_cover(W("x1"), 3, 2, 3, samples=10, seed=2)
        self.assertEqual(certificate.exponent, 1)
        self.assertEqual(certificate.status, 'PASS')

    def test_commutator_coset_cover(self):
        certificate = CoverService.word_coset_cover(W("[x1,x2]"), 3, 2, 3, samples=20, seed=1)
        self.assertEqual(certificate.status, 'PASS')
        self.assertEqual(certificate.passed, 20)
        self.assertTrue(all(len(s.factors) == 4 for s in certificate.samples))
        self.assertTrue(CoverService.verify_lift_certificate(certificate))

    def test_square_word(self):
        certificate = CoverService.word_coset_cover(W("x1^2"), 3, 3, 3, samples=10, seed=1)
        self.assertIn(certificate.status, ('PASS', 'FAIL', 'INCONCLUSIVE'))
        self.assertTrue(CoverService.verify_lift_certificate(certificate))

    def test_full_cover(self):
        certificate = CoverService.word_coset_cover(W("[x1,x2]"), 3, 2, 2, samples=10, seed=3, full=True)
        self.assertEqual(certificate.exponent, 7)
        self.assertEqual(certificate.status, 'PASS')
        self.assertTrue(all(len(s.factors) <= 7 for s in certificate.samples))

    def test_tampered_certificate(self):
        certificate = CoverService.word_coset_cover(W("[x1,x2]"), 3, 2, 2, samples=3, seed=1)
        sample = certificate.samples[0]
        bad = dataclasses.replace(sample, target=sample.target * truncated(M.elementary(3, 1, 2, 2), 2, 2))
        tampered = dataclasses.replace(certificate, samples=(bad,) + certificate.samples[1:])
        with self.assertRaises(CertificateError):
            CoverService.verify_lift_certificate(tampered)

    def test_serialized_certificate_replays(self):
        certificate = CoverService.word_coset_cover(W("[x1,x2]"), 3, 2, 2, samples=3, seed=1)
        data = LiftCertificateSerializer(certificate).data
        serializer = LiftCertificateSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertTrue(CoverService.verify_lift_certificate(serializer.save()))

    def test_trivial_word(self):
        with self.assertRaises(PreconditionError):
            CoverService.word_coset_cover(W("x1 x1^-1"), 3, 2, 2, samples=1)


class LevelTests(SimpleTestCase):

    def test_non_central_mod_p(self):
        table = table_for(2, 9)
        X = SymSet.of(table, [table.ordinal(M.elementary(2, 1, 2, 1))])
        self.assertEqual(P.level_k(X), 0)

    def test_congruence_element(self):
        table = table_for(2, 9)
        X = SymSet.of(table, [table.ordinal(M.elementary(2, 1, 2, 3))])
        self.assertEqual(P.level_k(X), 1)

    def test_identity_sentinel(self):
        self.assertIsNone(P.level_k(SymSet.of(table_for(2, 9), [0])))

    def test_stable_under_precision(self):
        for m in (9, 27):
            table = table_for(2, m)
            X = SymSet.of(table, [table.ordinal(M.elementary(2, 1, 2, 3))])
            self.assertEqual(P.level_k(X), 1)


class WidthBoundTests(SimpleTestCase):

    def test_whole_group(self):
        table = table_for(3, 4)
        X = SymSet(table, bytearray(b'\x01' * len(table)))
        self.assertEqual(P.padic_width_bound(X).bound, 1)

    def test_congruence_class(self):
        table = table_for(3, 4)
        X = GroupTableService.conjugation_closure(table, [table.ordinal(M.elementary(3, 1, 2, 2))])
        report = P.padic_width_bound(X)
        self.assertEqual((report.case, report.k), ('lie-algebra', 1))
        self.assertEqual(WidthBoundReportSerializer(report).data['case'], 'lie-algebra')
        self.assertIsNotNone(report.oracle)
        self.assertGreaterEqual(report.bound, report.oracle)
        self.assertTrue(report.verified)

    def test_transvection_class(self):
        table = table_for(3, 4)
        X = GroupTableService.conjugation_closure(table, [table.ordinal(M.elementary(3, 1, 2, 1))])
        report = P.padic_width_bound(X)
        self.assertEqual((report.case, report.k), ('covering', 0))
        self.assertEqual(report.bound % 3, 0)
        self.assertIsNotNone(report.oracle)
        self.assertGreaterEqual(report.bound, report.oracle)
        self.assertTrue(report.verified)

    def test_plain_set_respects_the_budget(self):
        table = table_for(3, 4)
        X = GroupTableService.conjugation_closure(table, [table.ordinal(M.elementary(3, 1, 2, 1))])
        plain = SymSet(table, bytearray(X.bits))
        report = P.padic_width_bound(plain, budget=20000)
        self.assertIsNone(report.oracle)
        self.assertFalse(report.verified)

    def test_small_dimension(self):
        table = table_for(2, 9)
        with self.assertRaises(PreconditionError):
            P.padic_width_bound(SymSet.of(table, [0]))
