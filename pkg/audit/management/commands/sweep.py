import io

from audit.conf import audit_setting
from audit.corpus import load_corpus
from audit.failure import Denominator, threshold_sweep
from audit.gaps import DOMAIN_LAG, lag_sweep
from audit.management.base import AuditCommand, lag_days, scale_name
from audit.pipeline import audit_corpus, confident, select_inclusion
from audit.records import Scale
from audit.reports import engine_options, write_lag_sweep_csv, write_threshold_csv


class Command(AuditCommand):
    help = 'Sweeps the imputation lag or the capability threshold over a corpus'

    def add_command_arguments(self, parser):
        parser.add_argument('corpus', help='frozen corpus (JSONL with schema header)')
        mode = parser.add_mutually_exclusive_group(required=True)
        mode.add_argument('--lag', nargs='*', type=lag_days, help='lags in days (default: LAG_SWEEP)')
        mode.add_argument('--tau', nargs='*', type=float, help='thresholds (default: THRESHOLD_SWEEP)')
        parser.add_argument('--percentiles', nargs='*', type=float, help='gap percentiles used as thresholds')
        parser.add_argument('--scales', nargs='+', type=scale_name, help='scales for the lag sweep')
        parser.add_argument('--denominator', choices=Denominator.values(), default=Denominator.ADMISSIBILITY_EXPECTED)
        parser.add_argument('--output', help='CSV path (default: stdout)')

    def run(self, context, **options):
        corpus = load_corpus(options['corpus'])
        records = confident(select_inclusion(corpus.records), context.confidence_floor)
        buffer = io.StringIO()
        if options['lag'] is not None:
            lags = options['lag'] or audit_setting('LAG_SWEEP')
            cells = lag_sweep(
                records, context.table, context.aliases, lags, options['scales'] or Scale.values(),
                lag_medians=context.lag_medians if DOMAIN_LAG in lags else None,
                **engine_options(context, records)
            )
            write_lag_sweep_csv(cells, buffer)
        else:
            verdicts = [audit.verdict for audit in audit_corpus(records, context)]
            points = threshold_sweep(
                verdicts, options['tau'] or audit_setting('THRESHOLD_SWEEP'),
                audit_setting('PERCENTILE_SWEEP') if options['percentiles'] is None else options['percentiles'],
                options['denominator'], 1 - context.alpha,
            )
            gaps = [verdict.gap for verdict in verdicts if verdict.gap is not None]
            write_threshold_csv(points, gaps, buffer)
        self.write_output(buffer.getvalue(), options['output'])
