"""
Frozen corpus files: one JSON header line then one PaperRecord per line.
"""
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from audit.exceptions import CorpusHeaderError, SchemaVersionMismatchError
from audit.serializers import PaperRecordSerializer, describe_errors, paper_record_data

logger = logging.getLogger(__name__)

SCHEMA = 'frontierlag.corpus'
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LineError:
    line: int
    message: str

    def __str__(self):
        return 'line {}: {}'.format(self.line, self.message)


@dataclass(frozen=True)
class Corpus:
    """validated records plus the lines that were rejected"""
    records: tuple
    errors: tuple = ()
    header: dict = field(default_factory=dict)
    content_hash: str = None

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def partial(self):
        return bool(self.errors)

    def by_doi(self):
        return {record.doi: record for record in self.records}

    def summary(self):
        """record counts by domain and by publication year"""
        return {
            'records': len(self.records),
            'rejected': len(self.errors),
            'by_domain': dict(sorted(Counter(record.domain for record in self.records).items())),
            'by_year': dict(sorted(
                (str(year), count)
                for year, count in Counter(record.publication_date.year for record in self.records).items()
            )),
        }


def _read_header(line, path):
    try:
        header = json.loads(line)
    except ValueError as ex:
        raise CorpusHeaderError('{}: header is not JSON ({})'.format(path, ex))
    if not isinstance(header, dict) or header.get('schema') != SCHEMA:
        raise CorpusHeaderError('{}: first line is not a {} header'.format(path, SCHEMA))
    if header.get('version') != SCHEMA_VERSION:
        raise SchemaVersionMismatchError('{}: schema version {} is not supported (expected {})'.format(
            path, header.get('version'), SCHEMA_VERSION,
        ))
    return header


def parse_record(data):
    """validates one corpus mapping into a PaperRecord; returns (record, error text)"""
    serializer = PaperRecordSerializer(data=data)
    if not serializer.is_valid():
        return None, describe_errors(serializer.errors)
    return serializer.save(), None


def load_corpus(path):
    """loads a JSONL corpus; bad record lines are collected rather than raised"""
    try:
        with open(path, 'rb') as handle:
            content = handle.read()
    except OSError as ex:
        raise CorpusHeaderError('{}: cannot read corpus ({})'.format(path, ex))
    lines = content.decode('utf-8-sig').splitlines()
    if not lines:
        raise CorpusHeaderError('{}: corpus is empty'.format(path))
    header = _read_header(lines[0], path)

    records, errors, seen = [], [], set()
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except ValueError as ex:
            errors.append(LineError(number, 'not JSON ({})'.format(ex)))
            continue
        record, message = parse_record(data)
        if record is None:
            errors.append(LineError(number, message))
            continue
        if record.doi in seen:
            errors.append(LineError(number, 'duplicate doi {}'.format(record.doi)))
            continue
        seen.add(record.doi)
        records.append(record.with_validated_eval_date())

    for error in errors:
        logger.warning('%s %s', path, error)
    corpus = Corpus(
        records=tuple(records), errors=tuple(errors), header=header,
        content_hash=hashlib.sha256(content).hexdigest(),
    )
    rejected_dates = sum(1 for record in records if record.eval_date_rejected)
    if rejected_dates:
        logger.info('%s: %d disclosed eval dates matched a forbidden proxy', path, rejected_dates)
    logger.info('loaded %d records from %s (%d rejected)', len(records), path, len(errors))
    return corpus


def write_corpus(records, path, window=None):
    """writes records in corpus-line form behind a schema header"""
    header = {'schema': SCHEMA, 'version': SCHEMA_VERSION}
    if window is not None:
        header['window'] = [str(bound) for bound in window]
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(json.dumps(header, sort_keys=True) + '\n')
        for record in records:
            handle.write(json.dumps(paper_record_data(record), sort_keys=True) + '\n')
    logger.info('wrote %d records to %s', len(records), path)
