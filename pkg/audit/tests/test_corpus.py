import json
from datetime import date

from audit.corpus import SCHEMA, load_corpus, parse_record
from audit.exceptions import CorpusHeaderError, SchemaVersionMismatchError
from audit.records import Disclosure
from audit.serializers import paper_record_data
from audit.tests.helpers import FixtureTestCase


class CorpusTestCase(FixtureTestCase):
    """tests frozen corpus files"""

    def _line(self, **changes):
        data = paper_record_data(self._record(doi='10.1000/extra'))
        data.update(changes)
        return json.dumps(data)

    def test_load(self):
        """tests a written corpus loads back with its header and summary"""
        corpus = load_corpus(self._corpus_file())
        self.assertEqual(len(corpus), 12)
        self.assertFalse(corpus.partial)
        self.assertEqual(corpus.header, {'schema': SCHEMA, 'version': 1})
        self.assertEqual(len(corpus.content_hash), 64)

        # verify counts by domain and year
        summary = corpus.summary()
        self.assertEqual(summary['by_domain'], {'coding': 6, 'medicine': 6})
        self.assertEqual(summary['by_year'], {'2023': 3, '2024': 5, '2025': 4})

        # verify a record keeps its fields
        record = corpus.by_doi()['10.1000/a05']
        self.assertEqual(record.publication_date, date(2024, 9, 1))
        self.assertEqual(record.primary_model_raw, 'acme-2')
        self.assertEqual(record.config_status('reasoning_mode'), Disclosure.UNDISCLOSED)
        self.assertFalse(record.human_comparator)

    def test_rejected_lines(self):
        """tests bad lines are collected with their line numbers"""
        path = self._corpus_file(extra_lines=(
            self._line(domain='astrology'),
            '{not json',
            self._line(doi='10.1000/a01'),
            self._line(),
        ))
        corpus = load_corpus(path)
        self.assertEqual(len(corpus), 13)
        self.assertTrue(corpus.partial)
        self.assertEqual([error.line for error in corpus.errors], [14, 15, 16])
        self.assertIn('duplicate doi', str(corpus.errors[2]))

    def test_header_errors(self):
        """tests missing, foreign and future headers"""
        with self.assertRaises(SchemaVersionMismatchError):
            load_corpus(self._corpus_file(header={'schema': SCHEMA, 'version': 2}))
        with self.assertRaises(CorpusHeaderError):
            load_corpus(self._corpus_file(header={'schema': 'other'}))
        with self.assertRaises(CorpusHeaderError):
            load_corpus(self._write('empty.jsonl', ''))
        with self.assertRaises(CorpusHeaderError):
            load_corpus(self._path('missing.jsonl'))

    def test_forbidden_proxy_dates(self):
        """tests disclosed eval dates equal to the publication date are dropped on load"""
        record = self._record(doi='10.1000/p1', eval_date_disclosed=date(2024, 9, 1))
        corpus = load_corpus(self._corpus_file(records=[record]))
        loaded = corpus.records[0]
        self.assertIsNone(loaded.eval_date_disclosed)
        self.assertEqual(loaded.eval_date_rejected, 'publication')

    def test_parse_record(self):
        """tests a single mapping is validated without raising"""
        record, error = parse_record(json.loads(self._line()))
        self.assertEqual(record.doi, '10.1000/extra')
        self.assertIsNone(error)

        record, error = parse_record(json.loads(self._line(publication_date='someday')))
        self.assertIsNone(record)
        self.assertIn('publication_date', error)
