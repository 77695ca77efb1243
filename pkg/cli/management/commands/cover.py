import logging

from padic.services import CoverService
from words.services import WordService
from wordwidth.exceptions import CertificateError, SoftFailure
from cli.base import LabCommand
from cli.certificates import seal

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = "Sample SL_n(Z/p^K) and write every target as a product of word values, as a lift certificate."
    required_flags = ('word', 'n', 'p')

    def add_command_arguments(self, parser):
        parser.add_argument('--full', action='store_true', help='Sample all of SL_n(Z/p^K), not only the base coset.')

    def run(self, config, options):
        w = WordService.parse_word(config['word'])
        n, p, K = config['n'], config['p'], config['K']
        certificate = CoverService.word_coset_cover(
            w, n, p, K, samples=config['budget_samples'], seed=config['seed'], full=options['full'],
        )
        document = seal('lift', certificate, seed=config['seed'])
        self.emit(
            {
                'status': certificate.status, 'word': str(w), 'n': n, 'p': p, 'K': K,
                'exponent': certificate.exponent, 'passed': certificate.passed,
                'samples': len(certificate.samples), 'seed': config['seed'], 'sha256': document['sha256'],
            },
            text=(
                f"{certificate.status} {w} n={n} p={p} K={K} exponent={certificate.exponent} "
                f"samples={certificate.passed}/{len(certificate.samples)} sha256={document['sha256']}"
            ),
        )
        self.write_document(document, config['out'])

        if certificate.status == 'INCONCLUSIVE':
            raise SoftFailure(f"No generating pair for '{w}' in SL_{n}(F_{p}); try another seed.")
        if certificate.status == 'FAIL':
            failed = [i for i, s in enumerate(certificate.samples) if not s.ok]
            raise CertificateError(
                f"{len(failed)} of {len(certificate.samples)} samples did not lift.",
                [{'field': f'sample {i}', 'message': certificate.samples[i].reason} for i in failed[:10]],
            )
