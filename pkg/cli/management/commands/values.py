import time

from django.conf import settings

from finite_lab.serializers import ValueSetReportSerializer
from finite_lab.services import GroupTableService, ValueSetService
from words.services import WordService
from cli.base import LabCommand


class Command(LabCommand):
    help = "Value set of a word over SL_n(Z/p^K), symmetrized, with its elements."
    required_flags = ('word', 'n', 'p')

    def add_command_arguments(self, parser):
        parser.add_argument('--budget-tuples', type=int, help='Most argument tuples to evaluate before sampling.')
        parser.add_argument('--no-elements', action='store_true', help='Print only the size and flags.')

    def run(self, config, options):
        started = time.perf_counter()
        w = WordService.parse_word(config['word'])
        table = GroupTableService.enumerate_group(config['n'], config['p'] ** config['K'], budget=config['budget_elements'])
        X = ValueSetService.value_set(
            w, table, budget=options.get('budget_tuples') or settings.LAB_BUDGET_TUPLES,
            samples=config['budget_samples'], seed=config['seed'],
        )
        elements = [] if options.get('no_elements') else [table.element(k).format() for k in X]
        report = ValueSetReportSerializer({
            'word': w, 'group': table, 'size': len(X), 'approximate': X.approximate,
            'conjugation_invariant': X.conjugation_invariant, 'elements': elements,
            'elapsed': round(time.perf_counter() - started, 3),
        }).data
        lines = [f"{w}\t|values|={len(X)}\t{'approximate' if X.approximate else 'exact'}"]
        lines.extend(elements)
        self.emit(dict(report, seed=config['seed']), text='\n'.join(lines))
