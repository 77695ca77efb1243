import json
import os
import tempfile
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from matrix_core.models import SquareIntMatrix
from matrix_core.services import MatrixService
from .certificates import digest
from .serializers import RunConfigSerializer
from .services import ConstantChainService

M = MatrixService


def run(*args, **options):
    out = StringIO()
    call_command(*args, stdout=out, stderr=StringIO(), **options)
    return out.getvalue()


def failure(*args, **options):
    """(returncode, error payload or message) of a command expected to fail."""
    out = StringIO()
    try:
        call_command(*args, stdout=out, stderr=StringIO(), **options)
    except CommandError as e:
        try:
            payload = json.loads(str(e))
        except ValueError:
            payload = str(e)
        return e.returncode, payload, out.getvalue()
    raise AssertionError(f"{args[0]} did not fail")


class WorkspaceMixin:

    def setUp(self):
        super().setUp()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = tmp.name

    def path(self, name):
        return os.path.join(self.tmp, name)


class RunConfigTests(SimpleTestCase):

    @override_settings(LAB_DEFAULT_SEED=11, LAB_BUDGET_SAMPLES=7)
    def test_defaults_come_from_settings(self):
        config = RunConfigSerializer.from_options({'word': 'x1', 'n': 3, 'verbosity': 1, 'seed': None})
        self.assertEqual(config['seed'], 11)
        self.assertEqual(config['budget_samples'], 7)
        self.assertEqual(config['format'], 'text')

    def test_explicit_values_win(self):
        config = RunConfigSerializer.from_options({'seed': 3, 'budget_samples': 2})
        self.assertEqual((config['seed'], config['budget_samples']), (3, 2))

    def test_budgets_must_be_positive(self):
        code, payload, _ = failure('width', word='x1', n=2, p=3, budget_samples=0)
        self.assertEqual(code, 1)
        self.assertEqual(payload['error']['code'], 'VALIDATION_ERROR')
        self.assertEqual(payload['error']['details'][0]['field'], 'budget_samples')


class FactorCommandTests(WorkspaceMixin, SimpleTestCase):

    def test_identity_gives_trivial_certificate(self):
        out = run('factor', SquareIntMatrix.identity(6).format(), q=2, out=self.path('id.json'))
        self.assertIn('PASS L,Uc,Uc,Uc,U', out)
        with open(self.path('id.json')) as fh:
            document = json.load(fh)
        self.assertEqual(document['kind'], 'factor')
        self.assertEqual(len(document['digests']), 5)
        self.assertEqual(document['sha256'], digest(document['body']))

    def test_certificate_verifies(self):
        g = M.elementary(6, 1, 2, 2)
        run('factor', g.format(), q=2, out=self.path('g.json'))
        out = run('verify', self.path('g.json'))
        self.assertTrue(out.startswith('PASS'))
        self.assertIn('L,Uc,Uc,Uc,U over q=2', out)

    def test_reruns_are_byte_identical(self):
        g = M.elementary(6, 1, 2, 2)
        run('factor', g.format(), q=2, out=self.path('a.json'))
        run('factor', g.format(), q=2, out=self.path('b.json'))
        with open(self.path('a.json'), 'rb') as a, open(self.path('b.json'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_matrix_from_file(self):
        with open(self.path('g.txt'), 'w') as fh:
            fh.write(M.elementary(6, 1, 2, 2).format() + '\n')
        out = run('factor', '@' + self.path('g.txt'), q=2, format='structured')
        self.assertIn('status=PASS', out)
        self.assertIn('classes=L,Uc,Uc,Uc,U', out)
        # no --out: the certificate follows the report on stdout
        self.assertIn('"kind": "factor"', out)

    def test_mennicke_failure_names_diagonal_entry(self):
        code, payload, _ = failure('factor', '3,2,0;4,3,0;0,0,1', q=2)
        self.assertEqual(code, 1)
        self.assertEqual(payload['error']['code'], 'MEMBERSHIP_FAILED')
        fields = [d['field'] for d in payload['error']['details']]
        self.assertIn('(1,1)', fields)
        self.assertIn('(2,2)', fields)

    def test_malformed_matrix(self):
        code, payload, _ = failure('factor', '1,2;3', q=1)
        self.assertEqual(code, 1)
        self.assertEqual(payload['error']['code'], 'PARSE_ERROR')

    def test_missing_file(self):
        code, payload, _ = failure('factor', '@' + self.path('nope.txt'))
        self.assertEqual((code, payload['error']['code']), (1, 'PARSE_ERROR'))


class VerifyCommandTests(WorkspaceMixin, SimpleTestCase):

    def write_factor_certificate(self, name):
        run('factor', M.elementary(6, 1, 2, 2).format(), q=2, out=self.path(name))
        return self.path(name)

    def test_perturbed_entry_names_factor(self):
        path = self.write_factor_certificate('t.json')
        with open(path) as fh:
            document = json.load(fh)
        factor = document['body']['factors'][4]
        rows = SquareIntMatrix.parse(factor['matrix']).to_lists()
        rows[0][1] += 1
        factor['matrix'] = SquareIntMatrix(rows).format()
        with open(path, 'w') as fh:
            json.dump(document, fh)

        code, message, out = failure('verify', path)
        self.assertEqual(code, 1)
        self.assertIn('1 of 1', message)
        self.assertTrue(out.startswith('FAIL'))
        self.assertIn('factor 5', out)

    def test_unparseable_file(self):
        with open(self.path('junk.json'), 'w') as fh:
            fh.write('{not json')
        code, _, out = failure('verify', self.path('junk.json'))
        self.assertEqual(code, 1)
        self.assertIn('parse error', out)

    def test_unknown_kind(self):
        document = {'kind': 'other', 'sha256': '0' * 64, 'digests': [], 'body': {}}
        with open(self.path('other.json'), 'w') as fh:
            json.dump(document, fh)
        _, _, out = failure('verify', self.path('other.json'))
        self.assertIn('kind', out)

    def test_reports_each_file(self):
        good = self.write_factor_certificate('good.json')
        with open(self.path('bad.json'), 'w') as fh:
            fh.write('[]')
        code, message, out = failure('verify', good, self.path('bad.json'))
        self.assertEqual(code, 1)
        self.assertIn('1 of 2', message)
        lines = [line for line in out.splitlines() if not line.startswith('  ')]
        self.assertTrue(lines[0].startswith('PASS'))
        self.assertTrue(lines[1].startswith('FAIL'))

    def test_lift_certificate_replays(self):
        run('cover', word='[x1,x2]', n=3, p=2, K=3, budget_samples=5, seed=1, out=self.path('lift.json'))
        out = run('verify', self.path('lift.json'))
        self.assertTrue(out.startswith('PASS'))
        self.assertIn('5/5 samples, residual valuation 3 at K=3', out)

    def test_tampered_lift_sample(self):
        run('cover', word='[x1,x2]', n=3, p=2, K=2, budget_samples=3, seed=1, out=self.path('lift.json'))
        with open(self.path('lift.json')) as fh:
            document = json.load(fh)
        sample = document['body']['samples'][1]
        rows = SquareIntMatrix.parse(sample['target']).to_lists()
        rows[0][2] += 2
        sample['target'] = SquareIntMatrix(rows).format()
        with open(self.path('lift.json'), 'w') as fh:
            json.dump(document, fh)
        _, _, out = failure('verify', self.path('lift.json'))
        self.assertIn('sample 1: residual valuation 1 below 2', out)
        self.assertIn('sample 1: checksum mismatch', out)


class WidthCommandTests(SimpleTestCase):

    def test_primitive_word(self):
        out = run('width', word='x1', n=2, p=3)
        self.assertIn('width=1\texact', out)
        self.assertIn('values=24', out)

    def test_commutator_over_f2(self):
        out = run('width', word='[x1,x2]', n=2, p=2)
        self.assertIn('values=3', out)
        self.assertIn('width=1\texact', out)

    def test_power_killing_the_group(self):
        out = run('width', word='x1^12', n=2, p=3, format='structured')
        self.assertIn('estimate.upper=0', out)
        self.assertIn('estimate.value_set_size=1', out)
        self.assertIn('estimate.exact=true', out)
        self.assertIn('group.order=24', out)
        self.assertIn('seed=', out)

    def test_sampled_value_set_gives_interval(self):
        out = run('width', word='[x1,x2]', n=2, p=5, budget_tuples=100, budget_samples=30, seed=4)
        self.assertIn('approximate', out)
        self.assertRegex(out, r'width=\d+(\.\.\d+)?\tapproximate')

    def test_group_over_budget(self):
        code, payload, _ = failure('width', word='x1', n=3, p=3, budget_elements=1000)
        self.assertEqual(code, 2)
        self.assertEqual(payload['error']['code'], 'BUDGET_EXCEEDED')

    def test_requires_word(self):
        code, payload, _ = failure('width', n=2, p=3)
        self.assertEqual(code, 1)
        self.assertEqual(payload['error']['details'], [{'field': 'word', 'message': 'This flag is required.'}])

    def test_bad_word(self):
        code, payload, _ = failure('width', word='x1 ^', n=2, p=3)
        self.assertEqual((code, payload['error']['code']), (1, 'PARSE_ERROR'))


class ValuesCommandTests(SimpleTestCase):

    def test_commutator_values_over_f2(self):
        out = run('values', word='[x1,x2]', n=2, p=2)
        lines = out.strip().splitlines()
        self.assertIn('|values|=3', lines[0])
        self.assertEqual(len(lines), 4)
        self.assertIn('1,0;0,1', lines[1:])

    def test_structured_without_elements(self):
        out = run('values', word='x1^12', n=2, p=3, no_elements=True, format='structured')
        self.assertIn('size=1', out)
        self.assertIn('conjugation_invariant=true', out)
        self.assertNotIn('elements.0', out)


class WitnessCommandTests(SimpleTestCase):

    def test_primitive_word(self):
        out = run('witness', word='x1')
        self.assertIn('q: 2', out)
        self.assertIn('d: 4', out)
        self.assertIn('replay: PASS', out)

    def test_square(self):
        out = run('witness', word='x1^2', format='structured')
        self.assertIn('q=4', out)
        self.assertIn('d=16', out)

    def test_trivial_word(self):
        code, payload, _ = failure('witness', word='x1 x1^-1')
        self.assertEqual((code, payload['error']['code']), (1, 'TRIVIAL_WORD'))


class ConstantsCommandTests(SimpleTestCase):

    def test_chain(self):
        out = run('constants')
        self.assertIn('congruence bound: 80', out)
        self.assertIn('global bound: 87', out)
        self.assertIn('adelic exponent: 7', out)
        self.assertIn('unipotent capture: 16', out)

    def test_structured(self):
        out = run('constants', format='structured')
        self.assertIn('global_bound=87', out)
        self.assertIn('factor_count=5', out)

    def test_chain_is_consistent(self):
        rows = {row.name: row.value for row in ConstantChainService.rows()}
        self.assertEqual(rows['congruence bound'], rows['unipotent capture'] * rows['factor count'])
        self.assertEqual(rows['global bound'], rows['congruence bound'] + rows['adelic exponent'])
        self.assertEqual(rows['unipotent capture'], 2 * rows['tridiagonal cover'])


class LiftCommandTests(SimpleTestCase):

    def test_square_root_of_seven(self):
        out = run('lift', polys=['x**2'], point='1', target='7', p=3, K=5)
        self.assertIn('point=175', out)
        self.assertIn('valuations=1,2,4,5', out)

    def test_two_variables(self):
        out = run('lift', polys=['x + y', 'x*y'], vars='x,y', point='2,1', target='57,680', p=3, K=4, format='structured')
        self.assertIn('point.0=', out)
        self.assertIn('iterations=', out)

    def test_rank_deficiency(self):
        code, payload, _ = failure('lift', polys=['x**2'], point='0', target='3', p=3, K=3)
        self.assertEqual((code, payload['error']['code']), (1, 'RANK_DEFICIENT'))

    def test_missing_point(self):
        code, payload, _ = failure('lift', polys=['x**2'], target='7', p=3)
        self.assertEqual((code, payload['error']['code']), (1, 'PRECONDITION_FAILED'))


class CoverCommandTests(WorkspaceMixin, SimpleTestCase):

    def test_commutator_cover(self):
        out = run('cover', word='[x1,x2]', n=3, p=2, K=3, budget_samples=4, seed=1, out=self.path('c.json'))
        self.assertIn('PASS', out)
        self.assertIn('samples=4/4', out)
        with open(self.path('c.json')) as fh:
            document = json.load(fh)
        self.assertEqual((document['kind'], document['seed']), ('lift', 1))
        self.assertEqual(len(document['digests']), 4)

    def test_primitive_word_structured(self):
        out = run('cover', word='x2', n=3, p=3, K=2, budget_samples=3, format='structured', out=self.path('x.json'))
        self.assertIn('exponent=1', out)
        self.assertIn('status=PASS', out)

    def test_trivial_word(self):
        code, payload, _ = failure('cover', word='x1 x1^-1', n=3, p=2)
        self.assertEqual((code, payload['error']['code']), (1, 'PRECONDITION_FAILED'))
