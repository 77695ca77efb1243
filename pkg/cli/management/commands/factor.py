import logging

from decomposition.services import FactorizationService
from matrix_core.models import SquareIntMatrix
from wordwidth.exceptions import MatrixFormatError
from cli.base import LabCommand
from cli.certificates import seal

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = "Factor a matrix of E(n,Z;q) as L·Uc·Uc·Uc·U and write the replayable certificate."

    def add_command_arguments(self, parser):
        parser.add_argument('matrix', help='Matrix text "a,b,c;d,e,f;g,h,i", or @path to read it from a file.')

    def run(self, config, options):
        text = options['matrix']
        if text.startswith('@'):
            try:
                with open(text[1:], encoding='utf-8') as fh:
                    text = fh.read()
            except OSError as e:
                raise MatrixFormatError(f"Cannot read matrix file '{text[1:]}': {e}")
        g = SquareIntMatrix.parse(text.strip())
        q = config['q']
        logger.info(f"factor: n={g.n} q={q} max_len={config['max_len']}")

        certificate = FactorizationService.factor_LU3U(g, q, config['max_len'])
        document = seal('factor', certificate, seed=config['seed'])
        self.emit(
            {
                'status': 'PASS', 'n': g.n, 'q': q, 'classes': certificate.class_sequence,
                'sha256': document['sha256'], 'out': config['out'] or '-',
            },
            text=f"PASS {certificate.class_sequence} n={g.n} q={q} sha256={document['sha256']}",
        )
        self.write_document(document, config['out'])
