import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field

from audit.capability import CapabilityTable
from audit.exceptions import EmptyFrontierError, NoPricedBaseError
from audit.records import format_month, month_end, month_of, month_range, parse_month

logger = logging.getLogger(__name__)

DEFAULT_PRICE_FACTOR = 10


class Variant(object):
    """which models compete for the frontier on a date"""
    ABSOLUTE = 'absolute'
    DEPLOYMENT = 'deployment'
    DOMAIN = 'domain'

    @classmethod
    def values(cls):
        return cls.ABSOLUTE, cls.DEPLOYMENT, cls.DOMAIN


@dataclass(frozen=True)
class FrontierPoint:
    """best model available on a date"""
    key: str
    score: float


@dataclass(frozen=True)
class FrontierStep:
    month: tuple
    key: str
    score: float


@dataclass(frozen=True)
class FrontierTrajectory:
    """monthly step function of the best available model on one scale"""
    scale: str
    variant: str
    steps: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        months = [step.month for step in self.steps]
        if months and months != month_range(months[0], months[-1]):
            raise ValueError('trajectory months must be consecutive')

    def __len__(self):
        return len(self.steps)

    @property
    def start(self):
        return self.steps[0].month

    @property
    def end(self):
        return self.steps[-1].month

    def step_for(self, when):
        """step covering the month a date falls in"""
        month = month_of(when)
        if not self.steps or month < self.start:
            raise EmptyFrontierError('{} precedes the trajectory starting {}'.format(when, format_month(self.start)))
        if month > self.end:
            raise ValueError('{} is after the trajectory ending {}'.format(when, format_month(self.end)))
        index = (month[0] - self.start[0]) * 12 + (month[1] - self.start[1])
        return self.steps[index]

    def score_at(self, when):
        return self.step_for(when).score

    def write_csv(self, handle):
        """writes month,key,score rows"""
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(('month', 'key', 'score'))
        for step in self.steps:
            writer.writerow((format_month(step.month), step.key, repr(float(step.score))))


def read_trajectory(handle, scale, variant=Variant.ABSOLUTE):
    """reads a month,key,score CSV back into a trajectory"""
    steps = []
    for row in csv.DictReader(handle):
        steps.append(FrontierStep(parse_month(row['month']), row['key'], float(row['score'])))
    return FrontierTrajectory(scale=scale, variant=variant, steps=tuple(steps))


def build_domain_index(records, table):
    """(domain, year) -> canonical keys evaluated by papers of that domain and year"""
    index = defaultdict(set)
    for record in records:
        keys = set(record.models_evaluated)
        if record.primary_model:
            keys.add(record.primary_model)
        index[(record.domain, record.publication_date.year)].update(key for key in keys if key in table)
    return {cell: frozenset(keys) for cell, keys in index.items()}


def _best(records, scale):
    # highest score; ties go to the earlier release, then the lexicographic key
    best = min(records, key=lambda record: (-record.score(scale), record.release_date, record.canonical_key))
    return FrontierPoint(best.canonical_key, best.score(scale))


class Frontier(object):
    """answers frontier-at-date queries for one scale and variant

    Only directly tabulated scores compete. The deployment variant keeps
    models whose input price is within price_factor of the cheapest priced
    non-frontier-tier model released by the date; unpriced models are skipped
    and counted in skipped_unpriced. The domain variant ranks the models
    evaluated by the domain's papers in the date's calendar year.
    """

    def __init__(self, table, scale, variant=Variant.ABSOLUTE, price_factor=DEFAULT_PRICE_FACTOR,
                 domain=None, domain_index=None):
        if variant not in Variant.values():
            raise ValueError('unknown frontier variant "{}"'.format(variant))
        if variant == Variant.DOMAIN and (domain is None or domain_index is None):
            raise ValueError('the domain frontier needs a domain and a corpus domain index')
        self.table = table
        self.scale = scale
        self.variant = variant
        self.price_factor = price_factor
        self.domain = domain
        self.domain_index = domain_index
        self.skipped_unpriced = set()

    def __str__(self):
        return 'Frontier<{} {}>'.format(self.scale, self.variant)

    def _released(self, when):
        return [
            record for record in self.table
            if record.release_date <= when and record.score(self.scale) is not None
        ]

    def candidates(self, when):
        """models competing for the frontier on a date"""
        if self.variant == Variant.DOMAIN:
            keys = self.domain_index.get((self.domain, when.year), frozenset())
            return [
                self.table.get(key) for key in sorted(keys)
                if self.table.get(key).score(self.scale) is not None
            ]

        released = self._released(when)
        if self.variant == Variant.ABSOLUTE:
            return released

        base_prices = [
            record.price_in for record in self.table
            if record.release_date <= when and not record.is_frontier_tier and record.price_in is not None
        ]
        if not base_prices:
            raise NoPricedBaseError('no priced base-tier model is released by {}'.format(when))
        ceiling = self.price_factor * min(base_prices)
        affordable = []
        for record in released:
            if record.price_in is None:
                if record.canonical_key not in self.skipped_unpriced:
                    logger.info('deployment frontier skips unpriced %s', record.canonical_key)
                self.skipped_unpriced.add(record.canonical_key)
                continue
            if record.price_in <= ceiling:
                affordable.append(record)
        return affordable

    def at(self, when):
        """FrontierPoint for a date"""
        candidates = self.candidates(when)
        if not candidates:
            raise EmptyFrontierError('no {} {} frontier model by {}'.format(self.variant, self.scale, when))
        return _best(candidates, self.scale)

    def trajectory(self, start, end):
        """monthly trajectory from start month to end month inclusive"""
        months = month_range(start, end)
        if not months:
            raise ValueError('empty month range {} to {}'.format(format_month(start), format_month(end)))
        steps = []
        for month in months:
            point = self.at(month_end(*month))
            steps.append(FrontierStep(month, point.key, point.score))
        metadata = {'scale': self.scale, 'variant': self.variant}
        if self.variant == Variant.DEPLOYMENT:
            metadata.update({
                'price_field': 'price_in',
                'price_factor': self.price_factor,
                'skipped_unpriced': sorted(self.skipped_unpriced),
            })
        elif self.variant == Variant.DOMAIN:
            metadata['domain'] = self.domain
        return FrontierTrajectory(scale=self.scale, variant=self.variant, steps=tuple(steps), metadata=metadata)


def build_monthly_trajectory(table, scale, start, end, variant=Variant.ABSOLUTE, **kwargs):
    """monthly frontier trajectory of a capability table"""
    return Frontier(table, scale, variant=variant, **kwargs).trajectory(start, end)


def frontier_at(source, when, scale=None, variant=Variant.ABSOLUTE, **kwargs):
    """(key, score) of the frontier on a date, from a table or a trajectory"""
    if isinstance(source, FrontierTrajectory):
        step = source.step_for(when)
        return FrontierPoint(step.key, step.score)
    if not isinstance(source, CapabilityTable):
        raise TypeError('frontier_at needs a CapabilityTable or FrontierTrajectory')
    if scale is None:
        raise ValueError('a scale is required when querying a capability table')
    return Frontier(source, scale, variant=variant, **kwargs).at(when)
