"""
Shared plumbing for the audit management commands.
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from audit.conf import audit_setting
from audit.exceptions import AuditError
from audit.gaps import DOMAIN_LAG
from audit.pipeline import AuditContext
from audit.records import Scale

logger = logging.getLogger(__name__)

EXIT_FATAL = 1
EXIT_PARTIAL = 2


def lag_days(value):
    """--lag-days accepts a non-negative day count or "domain" """
    if str(value).strip().lower() == DOMAIN_LAG:
        return DOMAIN_LAG
    days = int(value)
    if days < 0:
        raise ValueError('the lag must not be negative')
    return days


def scale_name(value):
    return Scale.parse(value)


class PartialRunError(CommandError):
    """exception raised after outputs were written but some work was skipped"""

    def __init__(self, message):
        super(PartialRunError, self).__init__(message, returncode=EXIT_PARTIAL)


class AuditCommand(BaseCommand):
    """BaseCommand carrying the global flags every audit command accepts

    Subclasses implement add_command_arguments and run(context, **options).
    AuditError and ValueError become CommandError with exit code 1.
    """

    def add_arguments(self, parser):
        parser.add_argument('--scale', type=scale_name, help='capability scale: eci, arena or aa')
        parser.add_argument('--lag-days', type=lag_days, help='eval-date imputation lag in days, or "domain"')
        parser.add_argument('--seed', type=int, help='seed for every resampling stream')
        parser.add_argument('--offline', action='store_true', help='answer metadata lookups from the cache only')
        parser.add_argument('--table', help='capability table CSV replacing the configured snapshot')
        parser.add_argument('--workers', type=int, help='threads for per-paper work')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def build_context(self, options):
        return AuditContext.from_settings(
            table_path=options.get('table'),
            scale=options.get('scale'),
            lag_days=options.get('lag_days'),
            seed=options.get('seed'),
            workers=options.get('workers'),
        )

    def handle(self, *args, **options):
        try:
            context = self.build_context(options)
            return self.run(context, **options)
        except AuditError as ex:
            logger.error('%s failed: %s', self.__module__.rsplit('.', 1)[-1], ex)
            raise CommandError('{}: {}'.format(type(ex).__name__, ex), returncode=EXIT_FATAL)
        except ValueError as ex:
            raise CommandError(str(ex), returncode=EXIT_FATAL)

    def run(self, context, **options):
        raise NotImplementedError('subclasses of AuditCommand must provide a run() method')

    def write_output(self, content, path=None):
        """text to a file when a path is given, otherwise to stdout"""
        if path:
            with open(path, 'w', encoding='utf-8', newline='\n') as handle:
                handle.write(content)
            self.stdout.write('wrote {}'.format(path))
        else:
            self.stdout.write(content, ending='')

    def default_corpus(self, options):
        return options.get('corpus') or audit_setting('CORPUS')
