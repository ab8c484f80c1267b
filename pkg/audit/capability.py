"""
Frozen multi-scale capability snapshot.

A table file is a UTF-8 CSV preceded by ``#`` declaration lines::

    # snapshot: epoch-2026-04
    # eci_range: 0,300
    # tiers.claude: haiku<sonnet<opus

Every family used by a row must declare its tier order. A companion
``<file>.sha256`` holding the hex digest of the file bytes, when present, is
checked on load.
"""
import csv
import hashlib
import io
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import date

from audit.exceptions import (
    DuplicateKeyError, MissingScoreError, NoSiblingError, TableIntegrityError, TableParseError, UnknownKeyError,
)
from audit.records import Scale
from audit.serializers import ModelRowSerializer, blank_to_none, describe_errors

logger = logging.getLogger(__name__)

HEADER = (
    'canonical_key', 'family', 'tier', 'release_date', 'eci', 'arena_elo', 'aa_index', 'price_in', 'price_out',
    'is_frontier_tier', 'reasoning_capable', 'reasoning_available_date', 'tool_capable', 'aliases',
)

SIBLING_WINDOW_DAYS = 90


class LookupPolicy(object):
    STRICT = 'strict'
    SIBLING_IMPUTE = 'sibling_impute'

    @classmethod
    def values(cls):
        return cls.STRICT, cls.SIBLING_IMPUTE


@dataclass(frozen=True)
class ScaleSpec:
    """unit and resolution of a capability scale"""
    name: str
    unit: str
    integer_grade: bool = False


SCALE_REGISTRY = {
    Scale.ECI: ScaleSpec(Scale.ECI, 'ECI index units'),
    Scale.ARENA_ELO: ScaleSpec(Scale.ARENA_ELO, 'Elo points'),
    Scale.AA_INDEX: ScaleSpec(Scale.AA_INDEX, 'AA index units', integer_grade=True),
}


@dataclass(frozen=True)
class ModelRecord:
    """one canonical model of the snapshot"""
    canonical_key: str
    family: str
    tier: str
    release_date: date
    scores: dict = field(default_factory=dict)
    price_in: float = None
    price_out: float = None
    is_frontier_tier: bool = False
    reasoning_capable: bool = False
    reasoning_available_date: date = None
    tool_capable: bool = False
    aliases: frozenset = frozenset()

    def __str__(self):
        return 'ModelRecord<{}>'.format(self.canonical_key)

    def score(self, scale):
        """directly tabulated score on scale, or None"""
        return self.scores.get(scale)

    def reasoning_at(self, when):
        """whether a reasoning mode was available for this model on a date"""
        if not self.reasoning_capable:
            return False
        available = self.reasoning_available_date or self.release_date
        return when is None or available <= when


@dataclass(frozen=True)
class ScoreLookup:
    """a score plus where it came from"""
    score: float
    provenance: str
    source_key: str

    DIRECT = 'direct'
    IMPUTED = 'imputed_from'

    @property
    def is_imputed(self):
        return self.provenance == ScoreLookup.IMPUTED

    def describe(self):
        if self.is_imputed:
            return 'imputed_from({})'.format(self.source_key)
        return ScoreLookup.DIRECT


class CapabilityTable(object):
    """validated, immutable capability snapshot indexed by canonical_key"""

    def __init__(self, records, snapshot_id='', content_hash='', eci_range=None, tier_orders=None):
        self._records = tuple(records)
        self._index = {}
        for record in self._records:
            if record.canonical_key in self._index:
                raise DuplicateKeyError('duplicate canonical_key "{}"'.format(record.canonical_key))
            self._index[record.canonical_key] = record
        self.snapshot_id = snapshot_id
        self.content_hash = content_hash
        self.eci_range = eci_range
        self.tier_orders = dict(tier_orders or {})
        self.scale_registry = SCALE_REGISTRY

    def __str__(self):
        return 'CapabilityTable<{} models, {}>'.format(len(self), self.snapshot_id or 'unnamed')

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, key):
        return key in self._index

    def __eq__(self, other):
        if not isinstance(other, CapabilityTable):
            return NotImplemented
        return (
            self._records == other._records and self.snapshot_id == other.snapshot_id
            and self.content_hash == other.content_hash and self.eci_range == other.eci_range
            and self.tier_orders == other.tier_orders
        )

    def __hash__(self):
        return hash((self.content_hash, self.snapshot_id, len(self._records)))

    @property
    def records(self):
        return self._records

    @property
    def families(self):
        return sorted({record.family for record in self._records})

    def get(self, key):
        """the ModelRecord for key; raises UnknownKeyError"""
        try:
            return self._index[key]
        except KeyError:
            raise UnknownKeyError('canonical_key "{}" is not in the capability table'.format(key))

    def family_members(self, family):
        """members of a family ordered by release date then key"""
        return sorted(
            (record for record in self._records if record.family == family),
            key=lambda record: (record.release_date, record.canonical_key),
        )

    def tier_rank(self, record):
        """ordinal position of a record's tier within its family"""
        return self.tier_orders[record.family].index(record.tier)

    def scored(self, scale):
        """records carrying a direct score on scale"""
        return [record for record in self._records if record.score(scale) is not None]

    def has_priced_base(self):
        return any(not record.is_frontier_tier and record.price_in is not None for record in self._records)

    def lookup_score(self, key, scale, policy=LookupPolicy.SIBLING_IMPUTE, window_days=SIBLING_WINDOW_DAYS):
        """score for key on scale under a lookup policy

        strict only returns tabulated scores; sibling_impute falls back to the
        nearest same-family same-tier sibling with a direct score released
        within window_days, ties going to the earlier release. Imputed scores
        never seed further imputation.
        """
        if policy not in LookupPolicy.values():
            raise ValueError('unknown lookup policy "{}"'.format(policy))
        record = self.get(key)
        direct = record.score(scale)
        if direct is not None:
            return ScoreLookup(direct, ScoreLookup.DIRECT, key)
        if policy == LookupPolicy.STRICT:
            raise MissingScoreError('{} has no {} score'.format(key, scale))

        candidates = []
        for sibling in self._records:
            if sibling.canonical_key == key or sibling.family != record.family or sibling.tier != record.tier:
                continue
            if sibling.score(scale) is None:
                continue
            distance = abs((sibling.release_date - record.release_date).days)
            if distance <= window_days:
                candidates.append((distance, sibling.release_date, sibling.canonical_key, sibling))
        if not candidates:
            raise NoSiblingError(
                '{} has no {} score and no same-tier sibling within {} days'.format(key, scale, window_days)
            )
        sibling = min(candidates, key=lambda entry: entry[:3])[3]
        return ScoreLookup(sibling.score(scale), ScoreLookup.IMPUTED, sibling.canonical_key)


def lookup_score(table, key, scale, policy=LookupPolicy.SIBLING_IMPUTE):
    return table.lookup_score(key, scale, policy)


def table_digest(content):
    """hex sha256 of table bytes"""
    return hashlib.sha256(content).hexdigest()


def _read_companion_digest(path):
    companion = '{}.sha256'.format(path)
    if not os.path.exists(companion):
        return None
    with open(companion, 'r', encoding='utf-8') as handle:
        tokens = handle.read().split()
    return tokens[0].lower() if tokens else None


def load_table(path, expected_hash=None):
    """loads and validates a capability table file

    expected_hash, or the companion .sha256 file when no hash is passed, must
    match the digest of the file bytes.
    """
    with open(path, 'rb') as handle:
        content = handle.read()
    digest = table_digest(content)
    expected = expected_hash or _read_companion_digest(path)
    if expected is not None and expected.strip().lower() != digest:
        raise TableIntegrityError('{} has digest {}, expected {}'.format(path, digest, expected))
    table = parse_table(content, content_hash=digest)
    logger.info('loaded %s from %s', table, path)
    return table


def _parse_declarations(lines):
    snapshot_id, eci_range, tier_orders = '', None, {}
    for number, line in lines:
        name, sep, value = line.lstrip('#').partition(':')
        name, value = name.strip(), value.strip()
        if not sep:
            continue
        if name == 'snapshot':
            snapshot_id = value
        elif name == 'eci_range':
            try:
                low, high = (float(bound) for bound in value.split(','))
            except ValueError:
                raise TableParseError('eci_range must be "low,high"', row=number)
            if not low < high:
                raise TableParseError('eci_range is empty', row=number)
            eci_range = (low, high)
        elif name.startswith('tiers.'):
            tiers = tuple(tier.strip() for tier in value.split('<') if tier.strip())
            if len(set(tiers)) != len(tiers) or not tiers:
                raise TableParseError('tier order for {} is malformed'.format(name[6:]), row=number)
            tier_orders[name[6:].strip()] = tiers
    return snapshot_id, eci_range, tier_orders


def parse_table(content, content_hash=None):
    """parses table bytes into a CapabilityTable"""
    if content_hash is None:
        content_hash = table_digest(content)
    try:
        text = content.decode('utf-8-sig')
    except UnicodeDecodeError as ex:
        raise TableParseError('table is not UTF-8: {}'.format(ex))

    lines = text.splitlines()
    declarations = []
    offset = 0
    while offset < len(lines) and (lines[offset].startswith('#') or not lines[offset].strip()):
        if lines[offset].startswith('#'):
            declarations.append((offset + 1, lines[offset]))
        offset += 1
    snapshot_id, eci_range, tier_orders = _parse_declarations(declarations)

    reader = csv.DictReader(io.StringIO('\n'.join(lines[offset:])))
    missing = [column for column in HEADER if column not in (reader.fieldnames or ())]
    if missing:
        raise TableParseError('header is missing columns: {}'.format(', '.join(missing)), row=offset + 1)

    records, rows = [], {}
    for row in reader:
        number = offset + reader.line_num
        if not any((value or '').strip() for value in row.values() if isinstance(value, str)):
            continue
        serializer = ModelRowSerializer(data=blank_to_none(row))
        if not serializer.is_valid():
            raise TableParseError(describe_errors(serializer.errors), row=number)
        data = serializer.validated_data
        key = data['canonical_key']
        if key in rows:
            raise DuplicateKeyError('duplicate canonical_key "{}" (first at row {})'.format(key, rows[key]), row=number)

        family, tier = data['family'], data['tier']
        if family not in tier_orders:
            raise TableParseError('family "{}" has no declared tier order'.format(family), row=number)
        if tier not in tier_orders[family]:
            raise TableParseError('tier "{}" is not declared for family "{}"'.format(tier, family), row=number)

        scores = {scale: data.get(scale) for scale in Scale.values() if data.get(scale) is not None}
        eci = scores.get(Scale.ECI)
        if eci is not None and eci_range is not None and not eci_range[0] < eci < eci_range[1]:
            raise TableParseError('eci {} outside declared range {}'.format(eci, eci_range), row=number)
        if any(not math.isfinite(score) for score in scores.values()):
            raise TableParseError('non-finite score', row=number)

        rows[key] = number
        records.append(ModelRecord(
            canonical_key=key,
            family=family,
            tier=tier,
            release_date=data['release_date'],
            scores=scores,
            price_in=data.get('price_in'),
            price_out=data.get('price_out'),
            is_frontier_tier=data['is_frontier_tier'],
            reasoning_capable=data['reasoning_capable'],
            reasoning_available_date=data.get('reasoning_available_date'),
            tool_capable=data['tool_capable'],
            aliases=data.get('aliases') or frozenset(),
        ))

    _check_reasoning_dates(records, rows)
    return CapabilityTable(
        records, snapshot_id=snapshot_id, content_hash=content_hash, eci_range=eci_range, tier_orders=tier_orders,
    )


def _check_reasoning_dates(records, rows):
    first_reasoning = {}
    for record in records:
        if record.reasoning_capable:
            current = first_reasoning.get(record.family)
            if current is None or record.release_date < current:
                first_reasoning[record.family] = record.release_date
    for record in records:
        available = record.reasoning_available_date
        first = first_reasoning.get(record.family)
        if available is not None and (first is None or available < first):
            raise TableParseError(
                'reasoning_available_date {} precedes the first reasoning-capable {} release'.format(
                    available, record.family
                ),
                row=rows[record.canonical_key],
            )
