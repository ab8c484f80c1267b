import csv
import logging
import re
import unicodedata
from dataclasses import dataclass
from datetime import date
from functools import lru_cache

from audit.exceptions import TableParseError
from audit.serializers import AliasRowSerializer, blank_to_none, describe_errors

logger = logging.getLogger(__name__)

# hyphen, non-breaking hyphen, figure dash, en dash, em dash, horizontal bar, minus
DASHES = re.compile('[‐‑‒–—―−﹘﹣－]')
SEPARATORS = re.compile(r'[\s_\-]+')
VENDOR_PREFIXES = (
    'openai/', 'anthropic/', 'google/', 'meta-llama/', 'meta/',
    'openai ', 'anthropic ', 'google ', 'meta ',
)


@dataclass(frozen=True)
class ModelMention:
    """a model token as it appears in a paper, with the date used for routing"""
    raw_token: str
    context_date: date = None

    def __post_init__(self):
        if not (self.raw_token or '').strip():
            raise ValueError('model mention needs a non-empty token')


@dataclass(frozen=True)
class Unresolved:
    """a mention that maps to no canonical key"""
    token: str
    reason: str = 'no_match'

    NO_MATCH = 'no_match'
    AMBIGUOUS_ROUTING = 'ambiguous_routing'

    def __str__(self):
        return 'Unresolved<{}: {}>'.format(self.token, self.reason)

    def __bool__(self):
        return False


def is_resolved(result):
    return isinstance(result, str)


@dataclass(frozen=True)
class RoutingRule:
    """date-aware routing of a product-surface token"""
    token: str
    threshold_date: date
    pre_key: str
    post_key: str

    def route(self, context_date):
        if context_date is None:
            return None
        return self.pre_key if context_date < self.threshold_date else self.post_key


class AliasMap(object):
    """normalized-token lookups used by the resolver"""

    def __init__(self, aliases=None, family_defaults=None, routing=None):
        self.aliases = dict(aliases or {})
        self.family_defaults = dict(family_defaults or {})
        self.routing = dict(routing or {})

    def __len__(self):
        return len(self.aliases) + len(self.family_defaults) + len(self.routing)

    def validate(self, table):
        """checks every target against a capability table"""
        for token, key in self.aliases.items():
            if key not in table:
                raise TableParseError('alias "{}" targets unknown key "{}"'.format(token, key))
        families = set(table.families)
        for token, family in self.family_defaults.items():
            if family not in families:
                raise TableParseError('family default "{}" targets unknown family "{}"'.format(token, family))
        for rule in self.routing.values():
            for key in (rule.pre_key, rule.post_key):
                if key not in table:
                    raise TableParseError('routing rule "{}" targets unknown key "{}"'.format(rule.token, key))
        _table_aliases(table)
        return self

    def routing_rule(self, token):
        """the routing rule for a normalized token, matched with separators removed"""
        return self.routing.get(routing_key(token))


def normalize(raw_token):
    """canonical spelling of a model token; never fuzzy"""
    token = unicodedata.normalize('NFKC', raw_token or '').lower()
    token = DASHES.sub('-', token).strip()
    stripped = True
    while stripped:
        stripped = False
        for prefix in VENDOR_PREFIXES:
            if token.startswith(prefix):
                token = token[len(prefix):].strip()
                stripped = True
    token = SEPARATORS.sub('-', token)
    return token.strip('-')


def routing_key(token):
    return token.replace('-', '')


def load_aliases(path, table=None):
    """reads an alias map CSV, validating it against table when one is given"""
    aliases, family_defaults, routing = {}, {}, {}
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            number = reader.line_num
            serializer = AliasRowSerializer(data=blank_to_none(row))
            if not serializer.is_valid():
                raise TableParseError(describe_errors(serializer.errors), row=number)
            data = serializer.validated_data
            token = normalize(data['token'])
            kind = data['kind']
            if kind == 'alias':
                aliases[token] = data['target_key']
            elif kind == 'family_default':
                family_defaults[token] = data['target_key']
            else:
                if routing_key(token) in routing:
                    raise TableParseError('second routing rule for "{}"'.format(token), row=number)
                routing[routing_key(token)] = RoutingRule(
                    token=token,
                    threshold_date=data['threshold_date'],
                    pre_key=data['pre_key'],
                    post_key=data['post_key'],
                )
    alias_map = AliasMap(aliases, family_defaults, routing)
    if table is not None:
        alias_map.validate(table)
    return alias_map


@lru_cache(maxsize=8)
def _table_aliases(table):
    aliases = {}
    for record in table:
        for alias in record.aliases:
            token = normalize(alias)
            if aliases.get(token, record.canonical_key) != record.canonical_key:
                raise TableParseError('table alias "{}" names both "{}" and "{}"'.format(
                    alias, aliases[token], record.canonical_key,
                ))
            aliases[token] = record.canonical_key
    return aliases


def earliest_member(table, family):
    """family member with the earliest release date, ties broken by key"""
    members = table.family_members(family)
    if not members:
        return None
    return members[0].canonical_key


def resolve(mention, aliases, table):
    """maps a ModelMention to a canonical key or an Unresolved value

    Exact keys pass through, then routing rules, explicit aliases, the table's
    own alias column, and finally bare family tokens.
    """
    raw = mention.raw_token.strip()
    if raw in table:
        return raw
    token = normalize(raw)
    if token in table:
        return token

    rule = aliases.routing_rule(token)
    if rule is not None:
        key = rule.route(mention.context_date)
        if key is None:
            logger.debug('"%s" needs a context date for routing', raw)
            return Unresolved(raw, Unresolved.AMBIGUOUS_ROUTING)
        return key

    key = aliases.aliases.get(token)
    if key is not None:
        return key
    key = _table_aliases(table).get(token)
    if key is not None:
        return key

    family = aliases.family_defaults.get(token)
    if family is not None:
        key = earliest_member(table, family)
        if key is not None:
            return key
    return Unresolved(raw, Unresolved.NO_MATCH)
