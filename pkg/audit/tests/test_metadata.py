from datetime import date
from unittest import mock

import requests

from audit.exceptions import InvalidDoiError, MetadataNotFoundError, MetadataTransportError
from audit.metadata import (
    CACHE, CROSSREF, OPENALEX, MetadataCache, MetadataClient, MetadataResponse, PolitenessGate,
    abstract_from_inverted_index, fetch_metadata, normalize_doi, parse_crossref, parse_openalex, skeleton_record,
)
from audit.records import Domain
from audit.tests.helpers import FixtureTestCase

CROSSREF_PAYLOAD = {
    'message': {
        'title': ['Acme-1 passes the board exam'],
        'container-title': ['Journal of Examples'],
        'abstract': '<jats:p>We evaluate   <jats:italic>acme-1</jats:italic>.</jats:p>',
        'published-print': {'date-parts': [[2024, 9]]},
    },
}

OPENALEX_PAYLOAD = {
    'title': 'Acme-1 passes the board exam',
    'publication_date': '2024-09-01',
    'primary_location': {'source': {'display_name': 'Journal of Examples'}},
    'abstract_inverted_index': {'We': [0], 'evaluate': [1], 'acme-1.': [2]},
}


def http_response(status, payload=None):
    response = mock.Mock(status_code=status)
    response.json.return_value = payload
    return response


class DoiTestCase(FixtureTestCase):
    """tests DOI normalization and payload parsing"""

    def test_normalize(self):
        """tests resolver prefixes and case are removed"""
        self.assertEqual(normalize_doi('https://doi.org/10.1000/ABC.1'), '10.1000/abc.1')
        self.assertEqual(normalize_doi(' doi:10.1000/x1 '), '10.1000/x1')
        for value in ('doi:abc', '10.1/x', '', None):
            with self.assertRaises(InvalidDoiError):
                normalize_doi(value)

    def test_parse_crossref(self):
        """tests titles, markup-free abstracts and partial dates"""
        fields = parse_crossref('10.1000/x1', CROSSREF_PAYLOAD)
        self.assertEqual(fields['journal'], 'Journal of Examples')
        self.assertEqual(fields['abstract'], 'We evaluate acme-1 .')
        self.assertEqual(fields['publication_date'], date(2024, 9, 1))

    def test_parse_openalex(self):
        """tests the inverted index is rebuilt in position order"""
        fields = parse_openalex('10.1000/x1', OPENALEX_PAYLOAD)
        self.assertEqual(fields['abstract'], 'We evaluate acme-1.')
        self.assertEqual(fields['publication_date'], date(2024, 9, 1))
        self.assertIsNone(abstract_from_inverted_index({}))


class MetadataClientTestCase(FixtureTestCase):
    """tests fetching through the cache with a mocked transport"""

    def _client(self, session, **kwargs):
        gate = PolitenessGate(0, sleep=mock.Mock())
        return MetadataClient(
            sources=kwargs.pop('sources', [CROSSREF, OPENALEX]), cache_dir=self._path('cache'), timeout=5,
            contact_email='audit@example.org', session=session, gate=gate, **kwargs
        )

    def test_fetch_and_cache(self):
        """tests a fetched record is cached and replayed without the transport"""
        session = mock.Mock()
        session.get.return_value = http_response(200, CROSSREF_PAYLOAD)
        response = self._client(session, sources=[CROSSREF]).fetch('https://doi.org/10.1000/X1')
        self.assertEqual(response.source, CROSSREF)
        self.assertEqual(response.journal, 'Journal of Examples')

        # verify the contact address travels with the request
        _, kwargs = session.get.call_args
        self.assertEqual(kwargs['params'], {'mailto': 'audit@example.org'})

        # verify a cache hit never touches a failing transport
        broken = mock.Mock()
        broken.get.side_effect = requests.exceptions.ConnectionError('down')
        replayed = self._client(broken).fetch('10.1000/x1')
        self.assertEqual(replayed.source, CACHE)
        self.assertEqual(replayed.publication_date, date(2024, 9, 1))
        broken.get.assert_not_called()

    def test_merge_sources(self):
        """tests later sources fill fields earlier ones lacked"""
        payload = {'message': {'title': ['Only a title']}}
        session = mock.Mock()
        session.get.side_effect = [http_response(200, payload), http_response(200, OPENALEX_PAYLOAD)]
        response = self._client(session).fetch('10.1000/x2')
        self.assertEqual(response.title, 'Only a title')
        self.assertEqual(response.journal, 'Journal of Examples')
        self.assertEqual(response.source, CROSSREF)
        self.assertEqual(session.get.call_count, 2)

    def test_not_found(self):
        """tests unknown DOIs and offline misses"""
        session = mock.Mock()
        session.get.return_value = http_response(404)
        with self.assertRaises(MetadataNotFoundError):
            self._client(session).fetch('10.1000/x3')

        with self.assertRaises(MetadataNotFoundError):
            self._client(mock.Mock(), offline=True).fetch('10.1000/x3')

    def test_transport_errors(self):
        """tests exhausted sources raise a transport error"""
        session = mock.Mock()
        session.get.side_effect = [http_response(503), requests.exceptions.Timeout('slow')]
        with self.assertRaises(MetadataTransportError):
            self._client(session).fetch('10.1000/x4')

    def test_politeness_gate(self):
        """tests consecutive calls to one host are spaced"""
        clock = mock.Mock(side_effect=[0.0, 0.2, 0.2])
        sleep = mock.Mock()
        gate = PolitenessGate(1.0, clock=clock, sleep=sleep)
        gate.call('https://api.crossref.org/works/a', lambda: None)
        gate.call('https://api.crossref.org/works/b', lambda: None)
        sleep.assert_called_once()
        self.assertAlmostEqual(sleep.call_args[0][0], 0.8)

    def test_cache_files(self):
        """tests cache entries are named by the DOI digest"""
        cache = MetadataCache(self._path('cache'))
        self.assertIsNone(cache.get('10.1000/x5'))
        cache.put(MetadataResponse('10.1000/x5', title='t', publication_date=date(2024, 1, 2)))
        self.assertEqual(cache.get('10.1000/x5').publication_date, date(2024, 1, 2))
        self.assertTrue(cache.path('10.1000/x5').endswith('.json'))

        # verify an offline fetch answers from the same cache
        response = fetch_metadata('https://doi.org/10.1000/X5', cache_dir=self._path('cache'), offline=True)
        self.assertEqual((response.source, response.title), (CACHE, 't'))

    def test_skeleton_record(self):
        """tests a skeleton record keeps only metadata fields"""
        record = skeleton_record(MetadataResponse('10.1000/x6', title='A study', publication_date=date(2024, 1, 2)))
        self.assertEqual(record.domain, Domain.OTHER)
        self.assertEqual(record.journal, 'unknown')
        self.assertIsNone(record.conclusion_framing)
        with self.assertRaises(MetadataNotFoundError):
            skeleton_record(MetadataResponse('10.1000/x7'))
