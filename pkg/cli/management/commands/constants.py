from cli.base import LabCommand
from cli.services import ConstantChainService


class Command(LabCommand):
    help = "The bookkeeping behind the width bounds: 80 on E(n,Z;q) and 87 on SL_n(Z)."

    def run(self, config, options):
        rows = ConstantChainService.rows()
        width = max(len(row.name) for row in rows)
        text = '\n'.join(
            f"{row.name}: {row.value}".ljust(width + 6) + f"= {row.formula}    [{row.source}]" for row in rows
        )
        report = {row.name.replace(' ', '_'): row.value for row in rows}
        self.emit(report, text=text)
