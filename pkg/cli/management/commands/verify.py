from django.core.management.base import CommandError

from cli.base import LabCommand
from cli.certificates import replay


class Command(LabCommand):
    help = "Replay certificate files by exact arithmetic; nonzero exit if any fails."

    def add_command_arguments(self, parser):
        parser.add_argument('paths', nargs='+', help='Certificate files written by factor or cover.')

    def run(self, config, options):
        failed = 0
        for index, path in enumerate(options['paths']):
            report = replay(path)
            status = 'PASS' if report.passed else 'FAIL'
            failed += not report.passed
            if config['format'] == 'structured':
                self.emit({f'file.{index}': {
                    'path': report.path, 'kind': report.kind, 'status': status, 'problems': report.problems,
                }})
                continue
            self.stdout.write(f"{status} {report.path} [{report.kind or '?'}] {report.summary}".rstrip())
            for problem in report.problems:
                self.stdout.write(f"  - {problem}")
        if failed:
            raise CommandError(f"{failed} of {len(options['paths'])} certificates failed replay.", returncode=1)
