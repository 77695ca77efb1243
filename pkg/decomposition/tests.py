import random
from math import gcd

from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from matrix_core.models import SquareIntMatrix
from matrix_core.services import MatrixService
from matrix_core.tests import level_words
from words.models import Word
from words.services import WordService
from wordwidth.exceptions import (
    CertificateError, MembershipError, OutOfRelationError, PreconditionError, SoftFailure, TrivialWordError,
)
from .constructions import ConstructionService
from .models import ClassifiedFactor, FactorCertificate
from .serializers import FactorCertificateSerializer, UnipotentCaptureSerializer
from .services import CertificateService, FactorizationService, RelationService

M = MatrixService
F = FactorizationService
C = ConstructionService


def random_level_product(n, q, length, seed):
    rng = random.Random(seed)
    factors = []
    for _ in range(length):
        i, j = rng.sample(range(1, n + 1), 2)
        factors.append(M.elementary(n, i, j, q * rng.choice([-2, -1, 1, 2])))
    return M.product(factors, n)


class SteinbergRelationTests(SimpleTestCase):

    def conjugate(self, n, r, s, b, i, j, a):
        return M.elementary(n, r, s, b) * M.elementary(n, i, j, a) * M.elementary(n, r, s, -b)

    def test_row_case(self):
        factors = RelationService.steinberg_conjugate(3, 2, 3, 5, 1, 2, 7)
        self.assertEqual([(f.i, f.j, f.x) for f in factors], [(1, 2, 7), (1, 3, -35)])

    def test_commuting_case(self):
        factors = RelationService.steinberg_conjugate(4, 3, 4, 5, 1, 2, 7)
        self.assertEqual([(f.i, f.j, f.x) for f in factors], [(1, 2, 7)])

    def test_row_case_other_indices(self):
        factors = RelationService.steinberg_conjugate(3, 1, 3, 2, 2, 1, 3)
        self.assertEqual([(f.i, f.j, f.x) for f in factors], [(2, 1, 3), (2, 3, -6)])

    def test_undefined_case(self):
        with self.assertRaises(OutOfRelationError):
            RelationService.steinberg_conjugate(3, 1, 2, 1, 2, 1, 1)

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_relations_multiply_out(self, data):
        n = data.draw(st.integers(3, 5))
        r, s = data.draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
        i, j = data.draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
        if j == r and i == s:
            return
        a, b = data.draw(st.integers(-50, 50)), data.draw(st.integers(-50, 50))
        factors = RelationService.steinberg_conjugate(n, r, s, b, i, j, a)
        self.assertEqual(M.product([f.matrix() for f in factors], n), self.conjugate(n, r, s, b, i, j, a))


class CommutatorBridgeTests(SimpleTestCase):

    def test_square_level(self):
        bridge = RelationService.commutator_bridge(2, 3, 3)
        self.assertEqual(bridge.target, M.elementary(3, 1, 3, 9))
        self.assertEqual(len(bridge.factors), 4)

    def test_zero_gives_identity(self):
        self.assertTrue(RelationService.commutator_bridge(2, 0, 5).target.is_identity())

    def test_size_four(self):
        bridge = RelationService.commutator_bridge(3, 2, 3)
        self.assertEqual(M.product([f.matrix() for f in bridge.factors]), M.elementary(4, 1, 4, 6))
        g, h = bridge.g.matrix(), bridge.h.matrix()
        self.assertEqual(g.inverse() * h.inverse() * g * h, bridge.target)


class BlockDiagTests(SimpleTestCase):

    def test_identity_blocks(self):
        identity = SquareIntMatrix.identity(3)
        result = F.block_diag_factor([identity, identity], 2)
        for x in (result.l1, result.u1, result.l2, result.u2):
            self.assertTrue(x.is_identity())
        self.assertEqual(result.certificate.class_sequence, "L,Uc,U")

    def test_two_blocks(self):
        result = F.block_diag_factor([M.elementary(3, 1, 2, 2), M.elementary(3, 1, 2, -2)], 2)
        target = SquareIntMatrix.from_blocks([M.elementary(3, 1, 2, 2), M.elementary(3, 1, 2, -2)])
        self.assertEqual(result.l1.inverse() * result.u1.inverse() * result.l2 * result.u2, target)
        self.assertTrue(M.in_L(result.l1, 2) and M.in_L(result.l2, 2))
        self.assertTrue(M.in_U(result.u1, 2) and M.in_U(result.u2, 2))

    def test_random_three_blocks(self):
        g1 = random_level_product(3, 3, 6, seed=11)
        g2 = random_level_product(3, 3, 6, seed=12)
        result = F.block_diag_factor([g1, g2, (g1 * g2).inverse()], 3)
        self.assertTrue(CertificateService.verify_certificate(result.certificate))
        self.assertEqual(result.certificate.n, 9)

    def test_rejects_bad_product(self):
        with self.assertRaises(PreconditionError):
            F.block_diag_factor([M.elementary(3, 1, 2, 2)], 2)

    def test_rejects_wrong_level(self):
        with self.assertRaises(MembershipError):
            F.block_diag_factor([M.elementary(3, 1, 2, 1), M.elementary(3, 1, 2, -1)], 2)


class CornerFactorTests(SimpleTestCase):

    def test_trivial_block(self):
        identity = SquareIntMatrix.identity(3)
        cert = F.corner_factor([(identity, identity)], 2)
        self.assertEqual(cert.class_sequence, "L,Uc,U,L")
        self.assertTrue(cert.input.is_identity())

    def test_two_pairs_padded(self):
        pairs = [
            (M.elementary(3, 1, 2, 2), M.elementary(3, 2, 1, 2)),
            (M.elementary(3, 1, 3, 2), M.elementary(3, 3, 1, 2)),
        ]
        cert = F.corner_factor(pairs, 2, n=12)
        self.assertEqual(cert.n, 12)
        corner = pairs[0][0] * pairs[0][1] * pairs[1][0] * pairs[1][1]
        self.assertEqual(cert.input.block(1, 3), corner)
        self.assertTrue(CertificateService.verify_certificate(cert))

    def test_inverse_pair_cancels(self):
        u, l = M.elementary(3, 2, 3, 4), M.elementary(3, 3, 1, -2)
        g_inv = (u * l).inverse()
        split = F.split_ul(g_inv, 2)
        self.assertIsNotNone(split)
        cert = F.corner_factor([(u, l), split], 2)
        self.assertTrue(cert.input.is_identity())
        self.assertTrue(M.product([f.matrix for f in cert.factors]).is_identity())

    def test_bottom_corner(self):
        pairs = [(M.elementary(3, 1, 2, 2), M.elementary(3, 3, 2, 2))] * 2
        cert = F.corner_factor(pairs, 2, corner='bottom', n=7)
        self.assertEqual(cert.input.block(5, 3), M.product([u * l for u, l in pairs]))
        self.assertTrue(CertificateService.verify_certificate(cert))

    def test_split_rejects_non_product(self):
        self.assertIsNone(F.split_ul(SquareIntMatrix.parse("0,-1,0;1,0,0;0,0,1"), 1))

    def test_rejects_non_unipotent_pair(self):
        with self.assertRaises(MembershipError):
            F.corner_factor([(M.elementary(3, 2, 1, 2), M.elementary(3, 2, 1, 2))], 2)


class StableRangeTests(SimpleTestCase):

    def assertStable(self, a, t):
        self.assertEqual(gcd(*[x - ti * a[0] for x, ti in zip(a[1:], t)]), gcd(*a))

    def test_examples(self):
        for a in ((6, 10, 15), (1, 0, 0), (4, 6, 9)):
            self.assertStable(a, F.stable_range_coeffs(a))
        self.assertEqual(F.stable_range_coeffs((4, 6, 9)), (0, 1))

    def test_zero_vector(self):
        with self.assertRaises(PreconditionError):
            F.stable_range_coeffs((0, 0, 0))

    def test_long_vector_searches_leading_coordinates(self):
        a = (3,) + (2,) * 10
        t = F.stable_range_coeffs(a)
        self.assertStable(a, t)
        self.assertEqual(t, (0, 0, 0, 1) + (0,) * 6)

    def test_crt_fallback(self):
        a = (30, 7 * 11 * 13, 7 * 11 * 17, 2)
        self.assertStable(a, F._stable_range_crt(a))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=3, max_size=6).filter(any))
    def test_gcd_preserved(self, a):
        self.assertStable(a, F.stable_range_coeffs(a))


class PeelTests(SimpleTestCase):

    def test_already_reduced(self):
        inner = random_level_product(3, 2, 5, seed=1)
        step = F.peel_once(inner.embed(4, 2), 2)
        for x in step.prefix:
            self.assertTrue(x.is_identity())
        self.assertEqual(step.reduced, inner)

    def test_small_example(self):
        g = M.elementary(4, 2, 1, 2) * M.elementary(4, 1, 2, 4)
        step = F.peel_once(g, 2)
        self.assertEqual(step.c2 * step.r * step.c1 * g * step.r2, step.reduced.embed(4, 2))
        self.assertTrue(M.mennicke_in_E(step.reduced, 2))

    def test_random_word(self):
        g = random_level_product(5, 3, 10, seed=5)
        step = F.peel_once(g, 3)
        self.assertEqual(step.c2 * step.r * step.c1 * g * step.r2, step.reduced.embed(5, 2))

    def test_needs_four_rows(self):
        with self.assertRaises(PreconditionError):
            F.peel_once(SquareIntMatrix.identity(3), 2)

    def test_rejects_non_member(self):
        with self.assertRaises(MembershipError):
            F.peel_once(M.elementary(4, 1, 2, 1), 2)


class FactorETests(SimpleTestCase):

    def test_identity(self):
        cert = F.factor_E(SquareIntMatrix.identity(4), 2)
        self.assertEqual(cert.class_sequence, "L,U,L,Eblock,U")
        for f in cert.factors:
            self.assertTrue(f.matrix.is_identity())

    def test_small_example(self):
        g = M.elementary(4, 1, 2, 2) * M.elementary(4, 3, 1, 2)
        cert = F.factor_E(g, 2)
        self.assertTrue(CertificateService.verify_certificate(cert))
        self.assertEqual(cert.factors[3].block_size, 3)

    def test_random_word(self):
        g = random_level_product(6, 3, 20, seed=7)
        cert = F.factor_E(g, 3)
        self.assertTrue(CertificateService.verify_certificate(cert))
        block = cert.factors[3].matrix
        self.assertEqual(block.block(1, 3), SquareIntMatrix.identity(3))

    def test_eblock_refeeds(self):
        g = random_level_product(5, 2, 12, seed=3)
        cert = F.factor_E(g, 2)
        block = cert.factors[3].matrix.block(3, 3)
        again = F.factor_E(block.embed(4, 2), 2)
        self.assertTrue(CertificateService.verify_certificate(again))

    @settings(max_examples=15, deadline=None)
    @given(level_words(5, 2, max_len=10))
    def test_certificates_replay(self, g):
        self.assertEqual(CertificateService.certificate_problems(F.factor_E(g, 2)), [])


class AlternatingTests(SimpleTestCase):

    def assertAlternates(self, result, g):
        self.assertTrue(result.success, result.reason)
        kinds = [f.kind for f in result.factors]
        self.assertTrue(all(a != b for a, b in zip(kinds, kinds[1:])), kinds)
        self.assertEqual(M.product([f.matrix for f in result.factors], 3), g)

    def test_single_upper(self):
        result = F.alternating_factor3(M.elementary(3, 1, 2, 2), 2)
        self.assertTrue(result.success)
        self.assertEqual([f.kind for f in result.factors], ['U'])

    def test_upper_lower(self):
        result = F.alternating_factor3(M.elementary(3, 1, 2, 2) * M.elementary(3, 2, 1, 2), 2)
        self.assertTrue(result.success)
        self.assertEqual(result.length, 2)

    def test_cube(self):
        g = M.product([M.elementary(3, 1, 2, 2), M.elementary(3, 2, 1, 2)] * 3)
        result = F.alternating_factor3(g, 2, max_len=16)
        self.assertAlternates(result, g)
        self.assertLessEqual(result.length, 6)

    def test_sign_block(self):
        g = SquareIntMatrix.parse("1,0,0;0,-1,0;0,0,-1")
        result = F.alternating_factor3(g, 1, max_len=6, max_pairs=2)
        self.assertAlternates(result, g)

    def test_random_blocks_fit_two_pairs(self):
        for seed in range(10):
            g = random_level_product(3, 2, 12, seed=seed)
            result = F.alternating_factor3(g, 2, max_len=6, max_pairs=2)
            self.assertAlternates(result, g)

    def test_failure_is_reported(self):
        # diagonal entries are not 1 mod q², so g is outside E(3,Z;2)
        g = SquareIntMatrix.parse("-1,0,0;0,-1,0;0,0,1")
        result = F.alternating_factor3(g, 2, max_len=4)
        self.assertFalse(result.success)
        self.assertIn("not in E(3,Z;2)", result.reason)

    def test_huge_entries_are_logged_by_digest(self):
        g = M.elementary(3, 1, 2, 2 * 10 ** 5000) * SquareIntMatrix.parse("-1,0,0;0,-1,0;0,0,1")
        with self.assertLogs('decomposition.services', 'WARNING') as logs:
            result = F.alternating_factor3(g, 2)
        self.assertFalse(result.success)
        self.assertIn("sha256", logs.output[0])
        self.assertLess(len(logs.output[0]), 500)


class FactorLU3UTests(SimpleTestCase):

    def test_identity(self):
        cert = F.factor_LU3U(SquareIntMatrix.identity(6), 2)
        self.assertEqual(cert.class_sequence, "L,Uc,Uc,Uc,U")
        self.assertTrue(CertificateService.verify_certificate(cert))

    def test_first_row_elementary(self):
        g = M.elementary(6, 1, 2, 2)
        cert = F.factor_LU3U(g, 2)
        self.assertEqual(len(cert.factors), 5)
        self.assertEqual(cert.input, g)

    def test_sign_block_fits_six_rows(self):
        g = M.diagonal([1, 1, 1, 1, -1, -1])
        cert = F.factor_LU3U(g, 1)
        self.assertEqual(cert.class_sequence, "L,Uc,Uc,Uc,U")
        self.assertEqual(CertificateService.certificate_problems(cert), [])

    def test_random_batch(self):
        rng = random.Random(2024)
        soft, total = 0, 0
        for n in (6, 9, 12):
            for q in (1, 2, 3):
                for _ in range(3):
                    g = random_level_product(n, q, rng.randint(5, 25), seed=rng.randrange(10 ** 6))
                    total += 1
                    try:
                        cert = F.factor_LU3U(g, q)
                    except SoftFailure as e:
                        soft += 1
                        self.assertEqual(e.exit_code, 2)
                        self.assertEqual(e.details[0]["field"], "residual_block")
                        self.assertTrue(e.details[0]["message"])
                        continue
                    self.assertEqual(cert.class_sequence, "L,Uc,Uc,Uc,U")
                    self.assertEqual(CertificateService.certificate_problems(cert), [])
        self.assertLessEqual(soft, total // 20)


class CertificateReplayTests(SimpleTestCase):

    def test_broken_witness_is_named(self):
        g = M.elementary(3, 1, 2, 2)
        bad = FactorCertificate(g, 2, (
            ClassifiedFactor('Uc', g, h=SquareIntMatrix.identity(3), k=M.elementary(3, 2, 3, 2)),
        ))
        with self.assertRaises(CertificateError) as ctx:
            CertificateService.verify_certificate(bad)
        self.assertIn("factor 1 (Uc)", ctx.exception.details[0]["message"])

    def test_wrong_product(self):
        cert = FactorCertificate(M.elementary(3, 1, 2, 4), 2, (ClassifiedFactor('U', M.elementary(3, 1, 2, 2)),))
        self.assertEqual(CertificateService.certificate_problems(cert), ["product of factors differs from the input"])

    def test_serializer_round_trip(self):
        cert = F.factor_E(M.elementary(4, 1, 2, 2) * M.elementary(4, 3, 1, 2), 2)
        data = FactorCertificateSerializer(cert).data
        self.assertEqual(data["classes"], "L,U,L,Eblock,U")
        serializer = FactorCertificateSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save(), cert)

    def test_serializer_requires_witness(self):
        data = {"input": "1,2;0,1", "q": 2, "factors": [{"kind": "Uc", "matrix": "1,2;0,1"}]}
        self.assertFalse(FactorCertificateSerializer(data=data).is_valid())


class TridiagonalCoverTests(SimpleTestCase):

    def superdiagonal(self, g):
        return [g.entry(i, i + 1) for i in range(1, g.n)]

    def test_zero_vector(self):
        for g in C.tridiagonal_cover(2, [0, 0, 0, 0]):
            self.assertTrue(g.is_identity())

    def test_superdiagonal_examples(self):
        covers = C.tridiagonal_cover(2, [1, 2, 3, 4, 5])
        self.assertEqual(self.superdiagonal(M.product(covers)), [2, 4, 6, 8, 10])
        for g in covers:
            self.assertTrue(M.in_U(g, 2))
        self.assertEqual(self.superdiagonal(M.product(C.tridiagonal_cover(1, [1, 1, 1]))), [1, 1, 1])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5), st.lists(st.integers(-20, 20), min_size=2, max_size=9))
    def test_product_superdiagonal(self, q, a):
        covers = C.tridiagonal_cover(q, a)
        self.assertEqual(self.superdiagonal(M.product(covers)), [q * x for x in a])
        self.assertTrue(all(M.in_U(g, q) for g in covers))


class SuperdiagConjugatorTests(SimpleTestCase):

    def test_equal_inputs(self):
        g = C.standard_unipotent(4, 2)
        self.assertTrue(C.superdiag_conjugator(g, g, 2).is_identity())

    def test_three_by_three(self):
        g = SquareIntMatrix.parse("1,1,0;0,1,1;0,0,1")
        g_prime = SquareIntMatrix.parse("1,1,5;0,1,1;0,0,1")
        self.assertEqual(C.superdiag_conjugator(g, g_prime, 1), M.elementary(3, 2, 3, -5))

    def test_rejects_wrong_superdiagonal(self):
        with self.assertRaises(MembershipError):
            C.superdiag_conjugator(M.elementary(3, 1, 2, 2), M.elementary(3, 1, 2, 2), 2)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_random_pairs(self, data):
        n = data.draw(st.integers(3, 6))
        q = data.draw(st.integers(1, 4))

        def draw():
            rows = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
            for i in range(n - 1):
                rows[i][i + 1] = q
                for j in range(i + 2, n):
                    rows[i][j] = q * data.draw(st.integers(-5, 5))
            return SquareIntMatrix(rows)

        g, g_prime = draw(), draw()
        h = C.superdiag_conjugator(g, g_prime, q)
        self.assertEqual(h * g * h.inverse(), g_prime)
        self.assertTrue(M.in_U(h, 1))


class UnipotentCaptureTests(SimpleTestCase):

    def test_capture(self):
        h = M.product([M.elementary(5, 1, 2, 4), M.elementary(5, 2, 4, -2), M.elementary(5, 4, 5, 6)])
        capture = C.unipotent_capture(h, 2)
        self.assertEqual(M.product(capture.f_cover), capture.f)
        self.assertEqual([capture.fh.entry(i, i + 1) for i in range(1, 5)], [2, 2, 2, 2])
        self.assertEqual(capture.conjugator * capture.fh * capture.conjugator.inverse(), capture.standard)
        self.assertEqual(capture.f.inverse() * capture.fh, h)
        data = UnipotentCaptureSerializer(capture).data
        self.assertEqual(data["standard"], capture.standard.format())
        self.assertEqual(len(data["f_cover"]), 3)


class QWitnessTests(SimpleTestCase):

    def test_single_letter(self):
        witness = C.q_witness(Word.generator(1))
        self.assertEqual(witness.g, M.elementary(3, 1, 2, 2))
        self.assertEqual(witness.h, M.elementary(3, 2, 3, 1))
        self.assertEqual(witness.commutator, M.elementary(3, 1, 3, 2))
        self.assertEqual((witness.q, witness.d), (2, 4))

    def test_square(self):
        witness = C.q_witness(WordService.parse_word("x1^2"))
        self.assertEqual(witness.g, M.elementary(3, 1, 2, 4))
        self.assertEqual(witness.q, 4)

    def test_commutator_word(self):
        witness = C.q_witness(WordService.parse_word("[x1,x2]"))
        c = witness.commutator
        self.assertFalse(c.is_identity())
        self.assertEqual(c.entry(1, 3) % witness.q, 0)
        self.assertEqual(c.entry(2, 3) % witness.q, 0)
        self.assertEqual(witness.conjugator * c * witness.conjugator.inverse(), M.elementary(3, 1, 3, witness.q))

    def test_three_letter_word(self):
        witness = C.q_witness(WordService.parse_word("[x1,x2] x3^2"))
        self.assertGreater(witness.q, 0)

    def test_trivial_word(self):
        with self.assertRaises(TrivialWordError):
            C.q_witness(WordService.parse_word("x1 x1^-1"))

    def test_free_tuple_letters_are_distinct(self):
        tuple4 = WordService.free_tuple(4)
        self.assertEqual(len(tuple4), 4)
        self.assertEqual(len({g.format() for g in tuple4}), 4)
