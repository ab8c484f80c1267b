import io

from audit.conf import audit_setting
from audit.management.base import AuditCommand
from audit.waterfall import compound_total, load_chips, write_plot_csv


class Command(AuditCommand):
    help = 'Compounds a chip file into retained fractions and writes plot-ready CSV'

    def add_command_arguments(self, parser):
        parser.add_argument('action', choices=('compute',))
        parser.add_argument('--chips', help='chip CSV (default: WATERFALL_CHIPS)')
        parser.add_argument('--output', help='CSV path (default: stdout)')

    def build_context(self, options):
        return None

    def run(self, context, **options):
        sequence = load_chips(options['chips'] or audit_setting('WATERFALL_CHIPS'))
        buffer = io.StringIO()
        write_plot_csv(sequence, buffer)
        self.write_output(buffer.getvalue(), options['output'])
        self.stderr.write('G_total = {:.3f} ({} chips, {} -> {})'.format(
            compound_total(sequence), len(sequence), sequence.baseline, sequence.final,
        ))
