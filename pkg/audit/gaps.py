import json
import logging
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from audit import stats
from audit.capability import LookupPolicy
from audit.exceptions import AuditError, MissingScoreError, UnknownDomainError, UnresolvedModelError
from audit.frontier import DEFAULT_PRICE_FACTOR, Frontier, FrontierTrajectory, Variant
from audit.records import ELICITATION_COMPONENTS, Disclosure, Domain
from audit.resolver import ModelMention, Unresolved, is_resolved, normalize, resolve

logger = logging.getLogger(__name__)

DOMAIN_LAG = 'domain'
REASONING_COMPONENTS = ('reasoning_mode', 'thinking_effort')
TOOL_COMPONENTS = ('tool_use',)


class EvalDateSource(object):
    DISCLOSED = 'disclosed'
    IMPUTED = 'imputed'
    CLIPPED = 'clipped_to_release'


class MissingConfig(object):
    """how an unextracted configuration field is read"""
    AS_MISSING = 'null_as_missing'
    AS_UNDISCLOSED = 'null_as_undisclosed'

    @classmethod
    def values(cls):
        return cls.AS_MISSING, cls.AS_UNDISCLOSED


class WindowMode(object):
    """which siblings count toward the tier gap"""
    SYMMETRIC = 'symmetric'
    RELEASED_BEFORE = 'released_before'

    @classmethod
    def values(cls):
        return cls.SYMMETRIC, cls.RELEASED_BEFORE


class RoutingTreatment(object):
    """handling of product-surface tokens such as bare ChatGPT"""
    ROUTE = 'route'
    EXCLUDE = 'exclude'
    ANTI_HYPOTHESIS = 'anti_hypothesis'

    @classmethod
    def values(cls):
        return cls.ROUTE, cls.EXCLUDE, cls.ANTI_HYPOTHESIS


@dataclass(frozen=True)
class EvalDate:
    date: object
    source: str
    lag_days: int = None

    def describe(self):
        if self.source == EvalDateSource.IMPUTED:
            return 'imputed({})'.format(self.lag_days)
        return self.source


@dataclass(frozen=True)
class ModelCaps:
    """what the tested model could do on its eval date"""
    reasoning: bool
    tool: bool

    @classmethod
    def for_record(cls, model, when):
        return cls(reasoning=model.reasoning_at(when), tool=model.tool_capable)


@dataclass(frozen=True)
class GapVector:
    """per-paper temporal gap, tier gap, elicitation index and shortfall"""
    doi: str
    scale: str
    primary_model: str
    eval_date_used: object
    eval_date_source: str
    temporal_gap: float
    frontier_key: str
    frontier_score: float
    model_score: float
    score_provenance: str
    tier_gap: float = None
    elicitation_index: float = None
    shortfall: float = None

    @property
    def is_clipped(self):
        return self.eval_date_source == EvalDateSource.CLIPPED

    @property
    def is_imputed_score(self):
        return self.score_provenance != 'direct'


def impute_eval_date(publication_date, release_date, lag_days):
    """max(publication_date - lag, release_date) with its source"""
    if lag_days < 0:
        raise ValueError('imputation lag must be non-negative')
    imputed = publication_date - timedelta(days=lag_days)
    if release_date is not None and release_date > imputed:
        return EvalDate(release_date, EvalDateSource.CLIPPED, lag_days)
    return EvalDate(imputed, EvalDateSource.IMPUTED, lag_days)


def elicitation_index(record, caps, missing=MissingConfig.AS_MISSING):
    """mean disclosure over the six elicitation components, None when all drop out"""
    if missing not in MissingConfig.values():
        raise ValueError('unknown missing-config handling "{}"'.format(missing))
    scores = []
    for name in ELICITATION_COMPONENTS:
        if name in REASONING_COMPONENTS and caps is not None and not caps.reasoning:
            continue
        if name in TOOL_COMPONENTS and caps is not None and not caps.tool:
            continue
        status = record.config_status(name)
        if status == Disclosure.NOT_APPLICABLE:
            continue
        if status is None:
            if missing == MissingConfig.AS_MISSING:
                continue
            status = Disclosure.UNDISCLOSED
        scores.append(1.0 if status == Disclosure.DISCLOSED else 0.0)
    if not scores:
        return None
    return sum(scores) / len(scores)


def shortfall(temporal_gap, index):
    if temporal_gap is None or index is None:
        return None
    return temporal_gap * (1.0 - index)


def tier_gap(model, table, scale, eval_date, window_days=90, mode=WindowMode.SYMMETRIC,
             policy=LookupPolicy.SIBLING_IMPUTE, model_score=None):
    """best strictly-higher same-family score within the window minus the tested score"""
    if mode not in WindowMode.values():
        raise ValueError('unknown tier window mode "{}"'.format(mode))
    if model_score is None:
        model_score = table.lookup_score(model.canonical_key, scale, policy).score
    low = eval_date - timedelta(days=window_days)
    high = eval_date if mode == WindowMode.RELEASED_BEFORE else eval_date + timedelta(days=window_days)
    best = None
    for sibling in table.family_members(model.family):
        if sibling.canonical_key == model.canonical_key or not low <= sibling.release_date <= high:
            continue
        try:
            score = table.lookup_score(sibling.canonical_key, scale, policy).score
        except MissingScoreError:
            continue
        if score > model_score and (best is None or score > best):
            best = score
    if best is None:
        return None
    return best - model_score


def load_lag_medians(path):
    """domain -> median submission-to-publication days"""
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    medians = {}
    for domain, days in data.items():
        if domain not in Domain.values():
            raise UnknownDomainError('lag medians name unknown domain "{}"'.format(domain))
        if not isinstance(days, int) or days < 0:
            raise ValueError('lag median for {} must be a non-negative day count'.format(domain))
        medians[domain] = days
    return medians


def _score_on(frontier, when):
    if isinstance(frontier, FrontierTrajectory):
        return frontier.score_at(when)
    return frontier.at(when).score


def rational_lag_baseline(domain, lag_medians, frontier, reference_date):
    """frontier movement over the domain's median peer-review latency"""
    if domain not in lag_medians:
        raise UnknownDomainError('no lag median configured for domain "{}"'.format(domain))
    earlier = reference_date - timedelta(days=lag_medians[domain])
    return _score_on(frontier, reference_date) - _score_on(frontier, earlier)


def excess_lag(vector, record, lag_medians, frontier):
    """observed gap beyond what peer-review latency alone implies"""
    implied = rational_lag_baseline(record.domain, lag_medians, frontier, record.publication_date)
    return vector.temporal_gap - implied


class GapEngine(object):
    """computes GapVectors for paper records against one table, scale and lag

    lag_days is either a day count or a mapping domain -> days.
    """

    def __init__(self, table, aliases, scale, lag_days=180, policy=LookupPolicy.SIBLING_IMPUTE,
                 window_days=90, window_mode=WindowMode.SYMMETRIC, missing=MissingConfig.AS_MISSING,
                 variant=Variant.ABSOLUTE, price_factor=DEFAULT_PRICE_FACTOR, domain_index=None,
                 routing=RoutingTreatment.ROUTE):
        if routing not in RoutingTreatment.values():
            raise ValueError('unknown routing treatment "{}"'.format(routing))
        self.table = table
        self.aliases = aliases
        self.scale = scale
        self.lag_days = lag_days
        self.policy = policy
        self.window_days = window_days
        self.window_mode = window_mode
        self.missing = missing
        self.variant = variant
        self.price_factor = price_factor
        self.domain_index = domain_index
        self.routing = routing
        self._frontiers = {}

    def __str__(self):
        return 'GapEngine<{} L={} {}>'.format(self.scale, self.lag_days, self.variant)

    def frontier_for(self, domain=None):
        """the Frontier used for papers of a domain"""
        cell = domain if self.variant == Variant.DOMAIN else None
        if cell not in self._frontiers:
            self._frontiers[cell] = Frontier(
                self.table, self.scale, variant=self.variant, price_factor=self.price_factor,
                domain=cell, domain_index=self.domain_index,
            )
        return self._frontiers[cell]

    def lag_for(self, record):
        if isinstance(self.lag_days, dict):
            try:
                return self.lag_days[record.domain]
            except KeyError:
                raise UnknownDomainError('no lag median configured for domain "{}"'.format(record.domain))
        return self.lag_days

    def resolve_token(self, token, context_date):
        """resolves one raw token honoring the routing treatment"""
        rule = self.aliases.routing_rule(normalize(token)) if self.aliases is not None else None
        if rule is not None and self.routing == RoutingTreatment.EXCLUDE:
            return Unresolved(token, Unresolved.AMBIGUOUS_ROUTING)
        if rule is not None and self.routing == RoutingTreatment.ANTI_HYPOTHESIS:
            return rule.post_key
        if self.aliases is None:
            return token if token in self.table else Unresolved(token)
        return resolve(ModelMention(token, context_date), self.aliases, self.table)

    def primary_model(self, record):
        """canonical key of the paper's primary model

        Multi-model papers take their highest-scoring evaluated model.
        """
        scored = []
        for token in record.models_evaluated:
            key = self.resolve_token(token, record.publication_date)
            if not is_resolved(key):
                continue
            try:
                scored.append((self.table.lookup_score(key, self.scale, self.policy).score, key))
            except MissingScoreError:
                continue
        if scored:
            return min(scored, key=lambda entry: (-entry[0], entry[1]))[1]

        if record.primary_model and record.primary_model in self.table:
            return record.primary_model
        token = record.primary_model_raw or record.primary_model or ''
        if not token.strip():
            raise UnresolvedModelError('{} names no primary model'.format(record))
        key = self.resolve_token(token, record.publication_date)
        if not is_resolved(key):
            raise UnresolvedModelError('{}: {}'.format(record, key))
        return key

    def eval_date(self, record, model):
        validated = record.with_validated_eval_date()
        if validated.eval_date_rejected:
            logger.info('%s: disclosed eval date matches %s date, imputing', record, validated.eval_date_rejected)
        if validated.eval_date_disclosed is not None:
            return EvalDate(validated.eval_date_disclosed, EvalDateSource.DISCLOSED)
        return impute_eval_date(record.publication_date, model.release_date, self.lag_for(record))

    def compute(self, record):
        """GapVector for one paper; raises UnresolvedModelError or MissingScoreError"""
        key = self.primary_model(record)
        model = self.table.get(key)
        lookup = self.table.lookup_score(key, self.scale, self.policy)
        when = self.eval_date(record, model)
        point = self.frontier_for(record.domain).at(when.date)
        temporal_gap = point.score - lookup.score
        index = elicitation_index(record, ModelCaps.for_record(model, when.date), self.missing)
        dyad = tier_gap(
            model, self.table, self.scale, when.date, window_days=self.window_days, mode=self.window_mode,
            policy=self.policy, model_score=lookup.score,
        )
        return GapVector(
            doi=record.doi,
            scale=self.scale,
            primary_model=key,
            eval_date_used=when.date,
            eval_date_source=when.describe(),
            temporal_gap=temporal_gap,
            frontier_key=point.key,
            frontier_score=point.score,
            model_score=lookup.score,
            score_provenance=lookup.describe(),
            tier_gap=dyad,
            elicitation_index=index,
            shortfall=shortfall(temporal_gap, index),
        )

    def compute_many(self, records):
        """(vectors, failures) for records sorted by DOI; failures map doi -> reason"""
        vectors, failures = [], {}
        for record in sorted(records, key=lambda record: record.doi):
            try:
                vectors.append((record, self.compute(record)))
            except AuditError as ex:
                failures[record.doi] = str(ex)
        return vectors, failures


def compute_gap(record, table, aliases, scale, lag_days=180, **kwargs):
    return GapEngine(table, aliases, scale, lag_days=lag_days, **kwargs).compute(record)


@dataclass(frozen=True)
class LagSweepCell:
    lag: object
    scale: str
    h1_median: float
    h2_slope: float
    h3_median: float
    n: int
    n_dyad: int
    clip_count: int
    n_failed: int


def lag_sweep(records, table, aliases, lags, scales, lag_medians=None, **engine_kwargs):
    """recomputes the headline statistics for every (lag, scale) cell"""
    if not records:
        raise ValueError('lag sweep needs a non-empty corpus')
    cells = []
    for scale in scales:
        for lag in lags:
            if lag == DOMAIN_LAG:
                if lag_medians is None:
                    raise UnknownDomainError('the domain lag needs configured lag medians')
                lag_days = dict(lag_medians)
            else:
                lag_days = int(lag)
            engine = GapEngine(table, aliases, scale, lag_days=lag_days, **engine_kwargs)
            vectors, failures = engine.compute_many(records)
            gaps = [vector.temporal_gap for _, vector in vectors]
            dyads = [vector.tier_gap for _, vector in vectors if vector.tier_gap is not None]
            try:
                slope = stats.pooled_domain_slope(
                    gaps,
                    [record.publication_year for record, _ in vectors],
                    [record.domain for record, _ in vectors],
                ).pooled
            except AuditError:
                slope = None
            cells.append(LagSweepCell(
                lag=lag,
                scale=scale,
                h1_median=float(np.median(gaps)) if gaps else None,
                h2_slope=slope,
                h3_median=float(np.median(dyads)) if dyads else None,
                n=len(gaps),
                n_dyad=len(dyads),
                clip_count=sum(1 for _, vector in vectors if vector.is_clipped),
                n_failed=len(failures),
            ))
            logger.info('lag sweep %s L=%s: n=%d dyads=%d clipped=%d', scale, lag, cells[-1].n,
                        cells[-1].n_dyad, cells[-1].clip_count)
    return cells
