import io

from audit.frontier import Frontier, Variant
from audit.management.base import AuditCommand
from audit.records import format_month, month_of, parse_month


class Command(AuditCommand):
    help = 'Builds the monthly frontier trajectory of the capability table'

    def add_command_arguments(self, parser):
        parser.add_argument('action', choices=('build',))
        parser.add_argument('--start', type=parse_month, help='first month, YYYY-MM (default: earliest release)')
        parser.add_argument('--end', type=parse_month, required=True, help='last month, YYYY-MM')
        parser.add_argument('--variant', choices=(Variant.ABSOLUTE, Variant.DEPLOYMENT), default=Variant.ABSOLUTE)
        parser.add_argument('--price-factor', type=float, help='deployment band over the cheapest base model')
        parser.add_argument('--output', help='CSV path (default: stdout)')

    def run(self, context, **options):
        scored = [model.release_date for model in context.table if model.score(context.scale) is not None]
        if not scored:
            raise ValueError('no model in the table is scored on {}'.format(context.scale))
        start = options['start'] or month_of(min(scored))
        frontier = Frontier(
            context.table, context.scale, options['variant'],
            price_factor=options['price_factor'] or context.price_factor,
        )
        trajectory = frontier.trajectory(start, options['end'])
        buffer = io.StringIO()
        trajectory.write_csv(buffer)
        self.write_output(buffer.getvalue(), options['output'])
        if frontier.skipped_unpriced:
            self.stderr.write('skipped unpriced: {}'.format(', '.join(sorted(frontier.skipped_unpriced))))
        self.stderr.write('{} {} frontier, {} to {}'.format(
            options['variant'], context.scale, format_month(start), format_month(options['end']),
        ))
