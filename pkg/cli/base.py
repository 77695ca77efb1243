import json
import logging

from django.core.management.base import BaseCommand, CommandError

from wordwidth.exceptions import build_error_payload, exit_code_for
from .certificates import dumps
from .serializers import FORMATS, RunConfigSerializer

logger = logging.getLogger(__name__)


def flatten(data, prefix=''):
    """Nested report dict to (key, value) pairs; list items get their index as a key part."""
    if isinstance(data, dict):
        items = data.items()
    elif isinstance(data, (list, tuple)):
        items = enumerate(data)
    else:
        yield prefix, data
        return
    for key, value in items:
        name = f"{prefix}.{key}" if prefix else str(key)
        yield from flatten(value, name)


def render_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if value is None:
        return ''
    return str(value)


class LabCommand(BaseCommand):
    """
    Shared flags, output formats and the exit-code contract: 0 verified,
    1 precondition failure, 2 soft failure. Subclasses implement `run`.
    """
    required_flags = ()

    def add_arguments(self, parser):
        parser.add_argument('--word', help='Word text, e.g. "[x1,x2]" or "x1^2 x2".')
        parser.add_argument('--n', type=int, help='Matrix size.')
        parser.add_argument('--q', type=int, help='Congruence level.')
        parser.add_argument('--p', type=int, help='Prime.')
        parser.add_argument('--K', type=int, help='Precision: work mod p^K.')
        parser.add_argument('--seed', type=int, help='Seed for every random choice.')
        parser.add_argument('--budget-elements', type=int, help='Largest group to enumerate.')
        parser.add_argument('--budget-samples', type=int, help='Samples drawn by sampling searches.')
        parser.add_argument('--max-len', type=int, help='Alternating search length cap.')
        parser.add_argument('--out', help='Certificate output path.')
        parser.add_argument('--format', choices=FORMATS, help='text (default) or structured key=value lines.')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            config = RunConfigSerializer.from_options(options, self.required_flags)
            self.config = config
            self.run(config, options)
        except CommandError:
            raise
        except Exception as exc:
            code = exit_code_for(exc)
            payload = build_error_payload(exc)
            if code == 2:
                logger.warning(f"{self.command_name}: {payload['error']['message']}")
            else:
                logger.info(f"{self.command_name}: {payload['error']['code']}")
            raise CommandError(json.dumps(payload, ensure_ascii=False), returncode=code)

    @property
    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def run(self, config, options):
        raise NotImplementedError

    def emit(self, report, text=None):
        """Structured mode prints key=value lines; text mode prints `text` or key: value lines."""
        if self.config['format'] == 'structured':
            for key, value in flatten(report):
                self.stdout.write(f"{key}={render_value(value)}")
            return
        if text is not None:
            self.stdout.write(text)
            return
        for key, value in report.items():
            self.stdout.write(f"{key}: {render_value(value)}")

    def write_document(self, document, out):
        text = dumps(document)
        if not out:
            self.stdout.write(text, ending='')
            return
        with open(out, 'w', encoding='utf-8') as fh:
            fh.write(text)
        logger.info(f"{self.command_name}: {document['kind']} certificate written to {out}")
