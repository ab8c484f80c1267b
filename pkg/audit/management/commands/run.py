from audit.management.base import AuditCommand, PartialRunError
from audit.reports import ALL, SUITES, corpus_run


class Command(AuditCommand):
    help = 'Runs a hypothesis suite over a frozen corpus and writes a report bundle'

    def add_command_arguments(self, parser):
        parser.add_argument('corpus', help='frozen corpus (JSONL with schema header)')
        parser.add_argument('--suite', choices=SUITES + (ALL,), default=ALL)
        parser.add_argument('--out', required=True, help='output directory for the bundle')
        parser.add_argument('--residual', help='residual corpus for the coverage suite')
        parser.add_argument('--full-text', help='directory of full-text checklist assessments for the ladder')

    def run(self, context, **options):
        result = corpus_run(
            options['corpus'], options['suite'], options['out'], context,
            residual_path=options['residual'], full_text_dir=options['full_text'],
        )
        for name in result.outputs:
            self.stdout.write(name)
        manifest = result.manifest
        if manifest['failed'] or manifest['rejected_lines']:
            raise PartialRunError('{} outputs failed and {} corpus lines were rejected; see {}'.format(
                len(manifest['failed']), len(manifest['rejected_lines']), result.directory,
            ))
        self.stdout.write(self.style.SUCCESS('{} suite complete: {} outputs in {}'.format(
            options['suite'], len(result.outputs), result.directory,
        )))
