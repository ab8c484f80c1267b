from audit.corpus import load_corpus
from audit.management.base import AuditCommand, PartialRunError, scale_name
from audit.metadata import MetadataClient
from audit.reports import audit_doi


class Command(AuditCommand):
    help = 'Audits one paper by DOI or record file and prints its report'

    def add_command_arguments(self, parser):
        parser.add_argument('doi', nargs='?', help='DOI of the paper to audit')
        parser.add_argument('--record', help='JSON file holding one corpus record')
        parser.add_argument('--corpus', help='frozen corpus searched before live metadata')
        parser.add_argument('--scales', nargs='+', type=scale_name, default=(), help='extra scales to report')
        parser.add_argument('--format', choices=('text', 'json'), default='text')
        parser.add_argument('--output', help='write the report here instead of stdout')

    def run(self, context, **options):
        if not options['doi'] and not options['record']:
            raise ValueError('give a DOI or --record')
        corpus_path = self.default_corpus(options)
        corpus = load_corpus(corpus_path) if corpus_path and not options['record'] else None
        report = audit_doi(
            options['doi'], context, corpus=corpus, record_path=options['record'],
            client=MetadataClient(offline=options['offline']), scales=options['scales'],
        )
        rendered = report.render_json().decode('utf-8') if options['format'] == 'json' else report.render_text()
        self.write_output(rendered, options['output'])
        missing = report.audits[report.scale].failure
        if missing:
            raise PartialRunError('{} has no gap vector: {}'.format(report.doi, missing))
