"""
Live DOI metadata from CrossRef and OpenAlex behind a replay cache.

Fetched records never carry coded valence, framing or model fields; the
audit degrades to whatever is decidable from dates and venue.
"""
import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import asdict, dataclass, replace
from datetime import date, datetime, timezone
from urllib.parse import quote, urlparse

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from audit.conf import audit_setting
from audit.exceptions import InvalidDoiError, MetadataNotFoundError, MetadataTransportError
from audit.records import Domain, PaperRecord

logger = logging.getLogger(__name__)

DOI_PATTERN = re.compile(r'^10\.\d{4,9}/\S+$')
DOI_PREFIXES = ('https://doi.org/', 'http://doi.org/', 'https://dx.doi.org/', 'http://dx.doi.org/', 'doi:')

CROSSREF = 'crossref'
OPENALEX = 'openalex'
CACHE = 'cache'

ENDPOINTS = {
    CROSSREF: 'https://api.crossref.org/works/{doi}',
    OPENALEX: 'https://api.openalex.org/works/doi:{doi}',
}

MERGED_FIELDS = ('title', 'abstract', 'publication_date', 'journal')
RETRY_STATUSES = (429, 500, 502, 503, 504)


def normalize_doi(value):
    """lowercase DOI without resolver scheme; raises InvalidDoiError otherwise"""
    doi = (value or '').strip()
    lowered = doi.lower()
    for prefix in DOI_PREFIXES:
        if lowered.startswith(prefix):
            doi = doi[len(prefix):]
            break
    doi = doi.strip().lower()
    if not DOI_PATTERN.match(doi):
        raise InvalidDoiError('"{}" is not a DOI'.format(value))
    return doi


@dataclass(frozen=True)
class MetadataResponse:
    doi: str
    title: str = None
    abstract: str = None
    publication_date: date = None
    journal: str = None
    source: str = None
    fetched_at: str = None

    def __str__(self):
        return 'MetadataResponse<{} via {}>'.format(self.doi, self.source)

    def as_dict(self):
        data = asdict(self)
        data['publication_date'] = self.publication_date.isoformat() if self.publication_date else None
        return data

    @classmethod
    def from_dict(cls, data):
        values = dict(data)
        if values.get('publication_date'):
            values['publication_date'] = date.fromisoformat(values['publication_date'])
        return cls(**{name: values.get(name) for name in cls.__dataclass_fields__})


def _strip_markup(text):
    if not text:
        return None
    return re.sub(r'\s+', ' ', re.sub(r'<[^>]+>', ' ', text)).strip() or None


def _date_parts(message):
    for key in ('published-print', 'published-online', 'issued', 'published'):
        parts = ((message.get(key) or {}).get('date-parts') or [[None]])[0]
        if parts and parts[0]:
            year, month, day = (list(parts) + [1, 1])[:3]
            return date(int(year), int(month or 1), int(day or 1))
    return None


def parse_crossref(doi, payload):
    message = payload.get('message') or {}
    titles = message.get('title') or []
    venues = message.get('container-title') or []
    return {
        'title': titles[0] if titles else None,
        'abstract': _strip_markup(message.get('abstract')),
        'publication_date': _date_parts(message),
        'journal': venues[0] if venues else None,
    }


def abstract_from_inverted_index(index):
    """rebuilds plain text from an OpenAlex inverted index by token position"""
    if not index:
        return None
    positions = [(position, token) for token, spots in index.items() for position in spots]
    return ' '.join(token for _, token in sorted(positions))


def parse_openalex(doi, payload):
    location = payload.get('primary_location') or {}
    venue = (location.get('source') or {}).get('display_name')
    published = payload.get('publication_date')
    return {
        'title': payload.get('title') or payload.get('display_name'),
        'abstract': abstract_from_inverted_index(payload.get('abstract_inverted_index')),
        'publication_date': date.fromisoformat(published) if published else None,
        'journal': venue,
    }


PARSERS = {CROSSREF: parse_crossref, OPENALEX: parse_openalex}


class MetadataCache(object):
    """one JSON file per normalized DOI, named by its sha256"""

    def __init__(self, directory):
        self.directory = directory
        self._lock = threading.Lock()

    def path(self, doi):
        return os.path.join(self.directory, hashlib.sha256(doi.encode('utf-8')).hexdigest() + '.json')

    def get(self, doi):
        try:
            with open(self.path(doi), 'r', encoding='utf-8') as handle:
                return MetadataResponse.from_dict(json.load(handle))
        except FileNotFoundError:
            return None

    def put(self, response):
        os.makedirs(self.directory, exist_ok=True)
        target = self.path(response.doi)
        with self._lock:
            scratch = target + '.tmp'
            with open(scratch, 'w', encoding='utf-8') as handle:
                json.dump(response.as_dict(), handle, sort_keys=True)
            os.replace(scratch, target)


class PolitenessGate(object):
    """spaces consecutive calls to the same host by at least delay seconds"""

    def __init__(self, delay, clock=time.monotonic, sleep=time.sleep):
        self.delay = delay
        self.clock = clock
        self.sleep = sleep
        self._last = {}
        self._locks = {}
        self._guard = threading.Lock()

    def _lock_for(self, host):
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def call(self, url, fn):
        host = urlparse(url).netloc
        with self._lock_for(host):
            last = self._last.get(host)
            if last is not None:
                wait = self.delay - (self.clock() - last)
                if wait > 0:
                    self.sleep(wait)
            try:
                return fn()
            finally:
                self._last[host] = self.clock()


def build_session(contact_email=''):
    """requests session with bounded retries (3 attempts, exponential backoff)"""
    session = requests.Session()
    retries = Retry(
        total=2, backoff_factor=1.0, status_forcelist=RETRY_STATUSES, allowed_methods=frozenset(['GET']),
    )
    session.mount('https://', HTTPAdapter(max_retries=retries))
    agent = 'frontierlag/1.0'
    if contact_email:
        agent += ' (mailto:{})'.format(contact_email)
        session.headers['From'] = contact_email
    session.headers.update({'User-Agent': agent, 'Accept': 'application/json'})
    return session


class MetadataClient(object):
    """fetches and merges DOI metadata; the cache always answers first"""

    def __init__(self, sources=None, cache_dir=None, delay=None, timeout=None, contact_email=None, offline=False,
                 session=None, gate=None):
        self.sources = list(sources or audit_setting('METADATA_SOURCES'))
        unknown = [source for source in self.sources if source not in ENDPOINTS]
        if unknown:
            raise ValueError('unknown metadata sources: {}'.format(', '.join(unknown)))
        self.cache = MetadataCache(cache_dir or audit_setting('METADATA_CACHE_DIR'))
        self.timeout = timeout or audit_setting('HTTP_TIMEOUT')
        self.contact_email = audit_setting('CONTACT_EMAIL', contact_email)
        self.offline = offline
        self.session = session or build_session(self.contact_email)
        self.gate = gate or PolitenessGate(audit_setting('POLITENESS_DELAY', delay))
        if not self.contact_email and not offline:
            logger.warning('no contact email configured; metadata requests go to the public pools')

    def _get(self, source, doi):
        url = ENDPOINTS[source].format(doi=quote(doi, safe='/'))
        params = {'mailto': self.contact_email} if self.contact_email else None
        try:
            response = self.gate.call(url, lambda: self.session.get(url, params=params, timeout=self.timeout))
        except requests.exceptions.RequestException as ex:
            raise MetadataTransportError('{} request for {} failed: {}'.format(source, doi, ex))
        if response.status_code == 404:
            return None
        if response.status_code >= 400:
            raise MetadataTransportError('{} answered {} for {}'.format(source, response.status_code, doi))
        try:
            return PARSERS[source](doi, response.json())
        except ValueError as ex:
            raise MetadataTransportError('{} sent an unreadable body for {}: {}'.format(source, doi, ex))

    def fetch(self, value):
        doi = normalize_doi(value)
        cached = self.cache.get(doi)
        if cached is not None:
            logger.info('metadata cache hit for %s', doi)
            return replace(cached, source=CACHE)
        if self.offline:
            raise MetadataNotFoundError('{} is not cached and the client is offline'.format(doi))
        logger.info('metadata cache miss for %s', doi)

        merged, contributors, failures = {}, [], []
        for source in self.sources:
            try:
                fields = self._get(source, doi)
            except MetadataTransportError as ex:
                logger.warning('%s', ex)
                failures.append(ex)
                continue
            if fields is None:
                continue
            contributors.append(source)
            for name in MERGED_FIELDS:
                if merged.get(name) is None and fields.get(name) is not None:
                    merged[name] = fields[name]
            if all(merged.get(name) is not None for name in MERGED_FIELDS):
                break
        if not contributors:
            if failures:
                raise MetadataTransportError('no metadata source answered for {}: {}'.format(doi, failures[-1]))
            raise MetadataNotFoundError('no metadata source knows {}'.format(doi))

        response = MetadataResponse(
            doi=doi, source=contributors[0], fetched_at=datetime.now(timezone.utc).isoformat(timespec='seconds'),
            **merged
        )
        self.cache.put(response)
        return response


def fetch_metadata(doi, sources=None, cache_dir=None, offline=False, **kwargs):
    return MetadataClient(sources=sources, cache_dir=cache_dir, offline=offline, **kwargs).fetch(doi)


def skeleton_record(response, domain=Domain.OTHER):
    """PaperRecord holding only what metadata can tell; coded fields stay absent"""
    if response.publication_date is None:
        raise MetadataNotFoundError('{} has no publication date'.format(response.doi))
    return PaperRecord(
        doi=response.doi,
        publication_date=response.publication_date,
        journal=response.journal or 'unknown',
        domain=domain,
        task_description=response.title or '',
    )
