import logging

from padic.models import PolyMapDescriptor
from padic.serializers import NewtonResultSerializer
from padic.services import PadicService
from wordwidth.exceptions import PreconditionError
from cli.base import LabCommand

logger = logging.getLogger(__name__)


def _integers(text, flag):
    try:
        return [int(x) for x in text.split(',')]
    except ValueError:
        raise PreconditionError(f"--{flag} expects comma-separated integers, got '{text}'.")


class Command(LabCommand):
    help = "Newton-lift an approximate solution of f(x) = b from precision p^(k+1) to p^K."
    required_flags = ('p',)

    def add_command_arguments(self, parser):
        parser.add_argument('--map', action='append', dest='polys', help='One coordinate polynomial; repeat per coordinate.')
        parser.add_argument('--vars', default='x', help='Comma-separated variable names.')
        parser.add_argument('--point', help='Starting point a, comma-separated.')
        parser.add_argument('--target', help='Target b, comma-separated.')
        parser.add_argument('--k', type=int, default=0, help='Valuation k of the map.')

    def run(self, config, options):
        missing = [flag for flag, key in (('map', 'polys'), ('point', 'point'), ('target', 'target')) if not options.get(key)]
        if missing:
            raise PreconditionError(f"lift needs --{', --'.join(missing)}.")
        variables = [v.strip() for v in options['vars'].split(',')]
        f = PolyMapDescriptor.from_exprs(options['polys'], variables)
        a = _integers(options['point'], 'point')
        b = _integers(options['target'], 'target')
        p, K, k = config['p'], config['K'], options['k']
        logger.info(f"lift: {f.target_arity} equations in {f.source_arity} unknowns, p={p} k={k} K={K}")

        result = PadicService.newton_lift(f, a, b, p, k, K)
        report = NewtonResultSerializer(result).data
        self.emit(
            report,
            text=(
                f"point={','.join(str(x) for x in result.point)}\titerations={result.iterations}"
                f"\tvaluations={','.join(str(v) for v in result.valuations)}"
            ),
        )
