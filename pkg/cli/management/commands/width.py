import logging
import time

from django.conf import settings

from finite_lab.serializers import WidthReportSerializer
from finite_lab.services import GroupTableService, ValueSetService
from words.services import WordService
from cli.base import LabCommand

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = "Width of a word over SL_n(Z/p^K): value set size, closure size and exact or sampled width."
    required_flags = ('word', 'n', 'p')

    def add_command_arguments(self, parser):
        parser.add_argument('--budget-tuples', type=int, help='Most argument tuples to evaluate before sampling.')

    def run(self, config, options):
        started = time.perf_counter()
        w = WordService.parse_word(config['word'])
        m = config['p'] ** config['K']
        table = GroupTableService.enumerate_group(config['n'], m, budget=config['budget_elements'])
        X = ValueSetService.value_set(
            w, table, budget=options.get('budget_tuples') or settings.LAB_BUDGET_TUPLES,
            samples=config['budget_samples'], seed=config['seed'],
        )
        estimate = ValueSetService.width_estimate(w, table, X)
        if estimate.approximate:
            logger.warning(f"width: value set of '{w}' was sampled; reporting an interval")
        report = WidthReportSerializer({
            'word': w, 'group': table, 'estimate': estimate, 'elapsed': round(time.perf_counter() - started, 3),
        }).data

        width = str(estimate.upper) if estimate.exact else f"{estimate.lower}..{estimate.upper}"
        flag = 'approximate' if estimate.approximate else 'exact'
        self.emit(
            dict(report, seed=config['seed']),
            text=f"{w}\tn={config['n']}\tm={m}\tvalues={estimate.value_set_size}\twidth={width}\t{flag}",
        )
