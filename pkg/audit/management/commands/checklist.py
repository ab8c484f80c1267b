import io

from audit.checklist import disclosure_ladder, load_assessment, summarize, write_ladder_csv
from audit.management.base import AuditCommand
from audit.reports import load_full_text, render_json, render_text


class Command(AuditCommand):
    help = 'Scores checklist assessments or builds the abstract/full-text disclosure ladder'

    def add_command_arguments(self, parser):
        parser.add_argument('action', choices=('score', 'ladder'))
        parser.add_argument('assessment', nargs='?', help='assessment JSON file to score')
        parser.add_argument('--abstract', help='directory of abstract-surface assessments (ladder)')
        parser.add_argument('--full-text', help='directory of full-text assessments (ladder)')
        parser.add_argument('--format', choices=('text', 'json'), default='text')
        parser.add_argument('--output', help='write here instead of stdout')

    def build_context(self, options):
        # checklist scoring reads no frozen inputs
        return None

    def run(self, context, **options):
        if options['action'] == 'score':
            if not options['assessment']:
                raise ValueError('checklist score needs an assessment file')
            assessment = load_assessment(options['assessment'])
            data = summarize(assessment).as_dict()
            if options['format'] == 'json':
                rendered = render_json(data).decode('utf-8')
            else:
                rendered = render_text(data, 'checklist for {}'.format(assessment.doi or options['assessment']))
            self.write_output(rendered, options['output'])
            return

        if not options['abstract'] or not options['full_text']:
            raise ValueError('checklist ladder needs --abstract and --full-text directories')
        rows = disclosure_ladder(load_full_text(options['abstract']), load_full_text(options['full_text']))
        buffer = io.StringIO()
        write_ladder_csv(rows, buffer)
        self.write_output(buffer.getvalue(), options['output'])
