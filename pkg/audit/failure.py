import csv
import enum
import logging
import re
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from audit import stats
from audit.exceptions import EmptyDenominatorError, TableParseError
from audit.gaps import MissingConfig
from audit.records import Disclosure, Framing
from audit.serializers import (
    AdmissibilityRowSerializer, ScaffoldBaselineRowSerializer, blank_to_none, describe_errors,
)

logger = logging.getLogger(__name__)

# same-family same-tier major-generation jumps on the ECI scale
CAPABILITY_ANCHORS = (9.92, 11.72, 16.30, 11.22)
DEFAULT_THRESHOLD = 12.0
ZERO_SHOT = re.compile(r'zero[\s_-]*shot|\bzero\b', re.IGNORECASE)


class TriBool(enum.Enum):
    """three-valued truth for audit dimensions"""
    TRUE = 'true'
    FALSE = 'false'
    UNKNOWN = 'unknown'

    def __str__(self):
        return self.value

    @classmethod
    def of(cls, value):
        if value is None:
            return cls.UNKNOWN
        if isinstance(value, TriBool):
            return value
        return cls.TRUE if value else cls.FALSE

    @classmethod
    def conjoin(cls, *values):
        """False on any False, else Unknown on any Unknown, else True"""
        values = [cls.of(value) for value in values]
        if cls.FALSE in values:
            return cls.FALSE
        if cls.UNKNOWN in values:
            return cls.UNKNOWN
        return cls.TRUE

    @classmethod
    def disjoin(cls, *values):
        """True on any True, else Unknown on any Unknown, else False"""
        values = [cls.of(value) for value in values]
        if cls.TRUE in values:
            return cls.TRUE
        if cls.UNKNOWN in values:
            return cls.UNKNOWN
        return cls.FALSE

    def __invert__(self):
        if self is TriBool.UNKNOWN:
            return self
        return TriBool.FALSE if self is TriBool.TRUE else TriBool.TRUE

    @property
    def is_decided(self):
        return self is not TriBool.UNKNOWN


class ElicitationMode(object):
    OR3 = 'or3'
    AND3 = 'and3'

    @classmethod
    def values(cls):
        return cls.OR3, cls.AND3


class InterpretiveMode(object):
    AND2 = 'and2'
    OR2 = 'or2'

    @classmethod
    def values(cls):
        return cls.AND2, cls.OR2


class Denominator(object):
    STRICT_DROPNONE = 'strict_dropnone'
    TRIVALUED = 'trivalued'
    ADMISSIBILITY_EXPECTED = 'admissibility_expected'
    FULL = 'full'

    @classmethod
    def values(cls):
        return cls.STRICT_DROPNONE, cls.TRIVALUED, cls.ADMISSIBILITY_EXPECTED, cls.FULL


def threshold_from_anchors(anchors=CAPABILITY_ANCHORS):
    """capability threshold as the rounded mean of the anchor jumps"""
    return float(round(float(np.mean(anchors))))


def capability_fail(gap, tau=DEFAULT_THRESHOLD):
    if tau <= 0:
        raise ValueError('capability threshold must be positive')
    if gap is None:
        return TriBool.UNKNOWN
    return TriBool.of(gap >= tau)


# lookups

class ScaffoldBaselines(object):
    """when a within-family scaffolded baseline was first published"""

    def __init__(self, entries=()):
        self.entries = tuple(entries)
        self.first = {}
        for family, available_from, _ in self.entries:
            if family not in self.first or available_from < self.first[family]:
                self.first[family] = available_from

    def existed(self, family, when):
        """True/False when the family is covered, None when it is not"""
        if family is None or when is None or family not in self.first:
            return None
        return self.first[family] <= when


def load_scaffold_baselines(path):
    entries = []
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            serializer = ScaffoldBaselineRowSerializer(data=blank_to_none(row))
            if not serializer.is_valid():
                raise TableParseError(describe_errors(serializer.errors), row=reader.line_num)
            data = serializer.validated_data
            entries.append((data['family'], data['available_from'], data['baseline']))
    return ScaffoldBaselines(entries)


@dataclass(frozen=True)
class AdmissibilityRule:
    kind: str
    expects: str
    domain: str = None
    pattern: object = None

    def matches(self, record):
        if self.domain is not None and record.domain != self.domain:
            return False
        if self.kind == 'domain_default':
            return True
        return bool(self.pattern.search(record.task_description or ''))


class AdmissibilityRules(object):
    """task-type rules deciding whether a human comparator is expected

    Keyword rules are tried in file order, then the domain default.
    """
    REQUIRED = 'required'
    EXEMPT = 'exempt'

    def __init__(self, rules=()):
        self.keyword_rules = [rule for rule in rules if rule.kind == 'keyword']
        self.domain_defaults = {rule.domain: rule for rule in rules if rule.kind == 'domain_default'}

    def expects(self, record):
        """required, exempt, or None when no rule covers the task"""
        for rule in self.keyword_rules:
            if rule.matches(record):
                return rule.expects
        rule = self.domain_defaults.get(record.domain)
        return rule.expects if rule is not None else None


def load_admissibility(path):
    rules = []
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            serializer = AdmissibilityRowSerializer(data=blank_to_none(row))
            if not serializer.is_valid():
                raise TableParseError(describe_errors(serializer.errors), row=reader.line_num)
            data = serializer.validated_data
            pattern = data.get('pattern')
            rules.append(AdmissibilityRule(
                kind=data['kind'],
                expects=data['expects'],
                domain=data.get('domain'),
                pattern=re.compile(pattern, re.IGNORECASE) if pattern else None,
            ))
    return AdmissibilityRules(rules)


# dimensions

def _undisclosed(record, name, missing):
    status = record.config_status(name)
    if status is None:
        return TriBool.TRUE if missing == MissingConfig.AS_UNDISCLOSED else TriBool.UNKNOWN
    return TriBool.of(status == Disclosure.UNDISCLOSED)


def _zero_shot_or_default(record, reasoning, missing):
    prompting = record.config_field('prompting_strategy')
    if prompting is None:
        zero_shot = TriBool.FALSE if missing == MissingConfig.AS_UNDISCLOSED else TriBool.UNKNOWN
    else:
        zero_shot = TriBool.of(prompting.is_disclosed and bool(ZERO_SHOT.search(prompting.value or '')))

    effort = record.config_field('thinking_effort')
    if reasoning is TriBool.FALSE:
        default_effort = TriBool.FALSE
    elif effort is None:
        default_effort = TriBool.TRUE if missing == MissingConfig.AS_UNDISCLOSED else TriBool.UNKNOWN
        default_effort = TriBool.conjoin(reasoning, default_effort)
    else:
        is_default = effort.status == Disclosure.UNDISCLOSED or (
            effort.is_disclosed and (effort.value or '').strip().lower() == 'default'
        )
        default_effort = TriBool.conjoin(reasoning, is_default)
    return TriBool.disjoin(zero_shot, default_effort)


def elicitation_clauses(record, model, eval_date, baselines, missing=MissingConfig.AS_MISSING):
    """(a) hidden reasoning mode, (b) hidden tool use, (c) default elicitation despite a scaffold"""
    reasoning = TriBool.of(model.reasoning_at(eval_date) if model is not None else None)
    tools = TriBool.of(model.tool_capable if model is not None else None)
    clause_a = TriBool.conjoin(reasoning, _undisclosed(record, 'reasoning_mode', missing))
    clause_b = TriBool.conjoin(tools, _undisclosed(record, 'tool_use', missing))
    baseline = baselines.existed(model.family if model is not None else None, eval_date) if baselines else None
    clause_c = TriBool.conjoin(_zero_shot_or_default(record, reasoning, missing), TriBool.of(baseline))
    return clause_a, clause_b, clause_c


def elicitation_fail(record, model, eval_date, baselines, mode=ElicitationMode.OR3,
                     missing=MissingConfig.AS_MISSING):
    if mode not in ElicitationMode.values():
        raise ValueError('unknown elicitation mode "{}"'.format(mode))
    clauses = elicitation_clauses(record, model, eval_date, baselines, missing)
    if mode == ElicitationMode.OR3:
        return TriBool.disjoin(*clauses)
    return TriBool.conjoin(*clauses)


def interpretive_fail(record, admissibility, mode=InterpretiveMode.AND2):
    """missing expected comparator and/or AI-generic framing"""
    if mode not in InterpretiveMode.values():
        raise ValueError('unknown interpretive mode "{}"'.format(mode))
    expects = admissibility.expects(record) if admissibility is not None else None
    if expects == AdmissibilityRules.EXEMPT:
        clause_a = TriBool.FALSE
    else:
        absent = TriBool.of(None if record.human_comparator is None else not record.human_comparator)
        required = TriBool.of(None if expects is None else expects == AdmissibilityRules.REQUIRED)
        clause_a = TriBool.conjoin(absent, required)
    framing = record.conclusion_framing
    clause_b = TriBool.of(None if framing is None else framing == Framing.AI_GENERIC)
    if mode == InterpretiveMode.AND2:
        return TriBool.conjoin(clause_a, clause_b)
    return TriBool.disjoin(clause_a, clause_b)


@dataclass(frozen=True)
class OpsTags:
    tau: float = DEFAULT_THRESHOLD
    elicitation: str = ElicitationMode.OR3
    interpretive: str = InterpretiveMode.AND2

    def __str__(self):
        return 'tau={};elicitation={};interpretive={}'.format(self.tau, self.elicitation, self.interpretive)


@dataclass(frozen=True)
class CompoundVerdict:
    """tri-valued verdict on the three audit dimensions"""
    doi: str
    capability: TriBool
    elicitation: TriBool
    interpretive: TriBool
    tags: OpsTags = field(default_factory=OpsTags)
    gap: float = None
    admissibility_expected: bool = False

    @property
    def compound(self):
        return TriBool.conjoin(self.capability, self.elicitation, self.interpretive)

    @property
    def fully_decided(self):
        return self.capability.is_decided and self.elicitation.is_decided and self.interpretive.is_decided

    def with_threshold(self, tau):
        """the same verdict reclassified at another capability threshold"""
        return replace(self, capability=capability_fail(self.gap, tau), tags=replace(self.tags, tau=tau))


class FailureClassifier(object):
    """classifies paper records under one fixed operationalisation"""

    def __init__(self, table, baselines=None, admissibility=None, tau=DEFAULT_THRESHOLD,
                 elicitation_mode=ElicitationMode.OR3, interpretive_mode=InterpretiveMode.AND2,
                 missing=MissingConfig.AS_MISSING):
        self.table = table
        self.baselines = baselines
        self.admissibility = admissibility
        self.tags = OpsTags(tau, elicitation_mode, interpretive_mode)
        self.missing = missing

    def classify(self, record, vector=None):
        """CompoundVerdict for a record; vector is None when no gap could be computed"""
        model = self.table.get(vector.primary_model) if vector is not None else None
        eval_date = vector.eval_date_used if vector is not None else None
        gap = vector.temporal_gap if vector is not None else None
        expects = self.admissibility.expects(record) if self.admissibility is not None else None
        return CompoundVerdict(
            doi=record.doi,
            capability=capability_fail(gap, self.tags.tau),
            elicitation=elicitation_fail(
                record, model, eval_date, self.baselines, self.tags.elicitation, self.missing
            ),
            interpretive=interpretive_fail(record, self.admissibility, self.tags.interpretive),
            tags=self.tags,
            gap=gap,
            admissibility_expected=expects == AdmissibilityRules.REQUIRED,
        )


# corpus aggregation

@dataclass(frozen=True)
class RateResult:
    rate: float
    ci: tuple
    k: int
    n: int
    denominator: str


def in_denominator(verdict, denominator):
    """whether a verdict counts in n; every denominator but strict needs a decidable compound"""
    if denominator == Denominator.STRICT_DROPNONE:
        return verdict.fully_decided
    if denominator == Denominator.ADMISSIBILITY_EXPECTED:
        return verdict.compound.is_decided and verdict.admissibility_expected
    return verdict.compound.is_decided


def corpus_rates(verdicts, denominator=Denominator.TRIVALUED, conf=0.95):
    """compound-failure rate with a Wilson interval over the chosen denominator"""
    if denominator not in Denominator.values():
        raise ValueError('unknown denominator "{}"'.format(denominator))
    members = [verdict for verdict in verdicts if in_denominator(verdict, denominator)]
    if not members:
        raise EmptyDenominatorError('no papers fall in the {} denominator'.format(denominator))
    k = sum(1 for verdict in members if verdict.compound is TriBool.TRUE)
    n = len(members)
    return RateResult(k / float(n), stats.wilson_ci(k, n, conf), k, n, denominator)


DIMENSIONS = ('capability', 'elicitation', 'interpretive')


def cell_label(cell):
    failed = [name for name, value in zip(DIMENSIONS, cell) if value]
    return '+'.join(failed) if failed else 'none'


@dataclass(frozen=True)
class UpsetCounts:
    cells: dict
    n: int
    marginals: dict

    def labelled(self):
        return {cell_label(cell): count for cell, count in self.cells.items()}


def upset_decomposition(verdicts):
    """counts over the eight True/False cells of fully decided verdicts"""
    cells = {cell: 0 for cell in product((True, False), repeat=3)}
    decided = [verdict for verdict in verdicts if verdict.fully_decided]
    for verdict in decided:
        cell = tuple(getattr(verdict, name) is TriBool.TRUE for name in DIMENSIONS)
        cells[cell] += 1
    n = len(decided)
    marginals = {
        name: (sum(1 for verdict in decided if getattr(verdict, name) is TriBool.TRUE) / float(n)) if n else 0.0
        for name in DIMENSIONS
    }
    return UpsetCounts(cells=cells, n=n, marginals=marginals)


@dataclass(frozen=True)
class SweepPoint:
    label: str
    tau: float
    rate: float
    ci: tuple
    k: int
    n: int


def threshold_percentile(gaps, tau=DEFAULT_THRESHOLD):
    """percentile of the observed gap distribution a threshold sits at"""
    return stats.percentile_of(gaps, tau)


def reanchor_threshold(source_gaps, target_gaps, tau=DEFAULT_THRESHOLD):
    """threshold on another scale at the same percentile of its gap distribution"""
    return float(stats.nearest_rank(target_gaps, threshold_percentile(source_gaps, tau)))


def threshold_sweep(verdicts, taus=(8, 10, 12, 15, 20), percentiles=(), denominator=Denominator.TRIVALUED,
                    conf=0.95):
    """compound-failure rate per threshold; percentiles derive thresholds from the gaps"""
    points = []
    gaps = [verdict.gap for verdict in verdicts if verdict.gap is not None]
    thresholds = [('tau={}'.format(tau), float(tau)) for tau in taus]
    for percentile in percentiles:
        if gaps:
            thresholds.append(('p{}'.format(percentile), float(stats.nearest_rank(gaps, percentile))))
    for label, tau in thresholds:
        if tau <= 0:
            logger.warning('skipping non-positive threshold %s (%s)', tau, label)
            continue
        rescored = [verdict.with_threshold(tau) for verdict in verdicts]
        try:
            result = corpus_rates(rescored, denominator, conf)
        except EmptyDenominatorError:
            points.append(SweepPoint(label, tau, None, (None, None), 0, 0))
            continue
        points.append(SweepPoint(label, tau, result.rate, result.ci, result.k, result.n))
    return points


def write_verdicts_csv(verdicts, handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('doi', 'capability', 'elicitation', 'interpretive', 'compound', 'tags'))
    for verdict in sorted(verdicts, key=lambda verdict: verdict.doi):
        writer.writerow((
            verdict.doi, verdict.capability.value, verdict.elicitation.value, verdict.interpretive.value,
            verdict.compound.value, str(verdict.tags),
        ))
