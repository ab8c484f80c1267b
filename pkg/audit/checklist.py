"""
Thirteen-item configuration-reporting checklist.

Items are binary with a not-applicable escape: reasoning items (7, 8) only
apply to reasoning-capable models and the tool item (9) only to tool-capable
ones. Items 1, 5 and 7 form the desk-reject tier.
"""
import csv
import json
import logging
from dataclasses import dataclass, field

from audit.conf import audit_setting
from audit.exceptions import ChecklistFileError, MissingFieldsError
from audit.records import DeclaredFrame, Disclosure
from audit.serializers import ChecklistAssessmentSerializer, describe_errors

logger = logging.getLogger(__name__)

ITEMS = {
    1: 'Model version, to the exact provider identifier',
    2: 'Provider and access method',
    3: 'Access or evaluation date window',
    4: 'Within-family tier and rationale',
    5: 'Declared capability frame, coherent with the tested tier',
    6: 'Comparator presence, type and version',
    7: 'Reasoning mode status',
    8: 'Reasoning effort or thinking budget',
    9: 'Tool use and retrieval',
    10: 'Scaffolding, agent framework and multi-turn structure',
    11: 'Prompting strategy',
    12: 'Sampling parameters and runs per item',
    13: 'Conclusion-evidence concordance and valence-conditional caveats',
}

CORE3 = (1, 5, 7)
EXEMPLAR_ELIGIBLE = (3, 6, 8, 9, 10, 11, 12, 13)
EXEMPLAR_MINIMUM = 3
COMPLETENESS_ITEMS = (7, 8, 9, 10, 11)
REASONING_ITEMS = (7, 8)
CONDITIONED_ITEMS = (7, 9)

# checklist item -> the configuration field recording it
CONFIG_ITEMS = {
    2: 'access_method',
    7: 'reasoning_mode',
    8: 'thinking_effort',
    9: 'tool_use',
    10: 'scaffolding',
    11: 'prompting_strategy',
    12: 'temperature',
}


@dataclass(frozen=True)
class ChecklistAssessment:
    """one paper's item statuses plus the facts frame coherence needs"""
    items: dict
    declared_frame: str = None
    tested_tier_is_frontier: bool = None
    reasoning_capable: bool = None
    doi: str = ''

    def __post_init__(self):
        missing = sorted(set(ITEMS) - set(self.items))
        if missing:
            raise MissingFieldsError('assessment lacks items {}'.format(', '.join(str(item) for item in missing)))
        if self.reasoning_capable and self.items[7] == Disclosure.NOT_APPLICABLE:
            raise ValueError('item 7 cannot be not applicable for a reasoning-capable model')

    def __str__(self):
        return 'ChecklistAssessment<{}>'.format(self.doi or '?')

    def status(self, item):
        return self.items[item]

    def disclosed(self, item):
        return self.items[item] == Disclosure.DISCLOSED

    def applicable(self, item):
        return self.items[item] != Disclosure.NOT_APPLICABLE

    def with_item(self, item, status):
        items = dict(self.items)
        items[item] = status
        return ChecklistAssessment(
            items, self.declared_frame, self.tested_tier_is_frontier, self.reasoning_capable, self.doi,
        )


@dataclass(frozen=True)
class Core3Verdict:
    failing: frozenset = field(default_factory=frozenset)

    @property
    def passed(self):
        return not self.failing

    def __str__(self):
        if self.passed:
            return 'pass'
        return 'desk_reject({})'.format(','.join(str(item) for item in sorted(self.failing)))


def core3(assessment):
    """desk-reject tier: items 1 and 5 disclosed, item 7 disclosed or not applicable"""
    failing = set()
    for item in CORE3:
        status = assessment.status(item)
        if status == Disclosure.DISCLOSED:
            continue
        if item == 7 and status == Disclosure.NOT_APPLICABLE:
            continue
        failing.add(item)
    return Core3Verdict(frozenset(failing))


def frame_coherence(assessment):
    """a declared frontier frame must come with a frontier-tier model"""
    if assessment.declared_frame is None or assessment.tested_tier_is_frontier is None:
        raise MissingFieldsError('frame coherence needs a declared frame and the tested tier')
    if assessment.declared_frame == DeclaredFrame.FRONTIER:
        return bool(assessment.tested_tier_is_frontier)
    return True


def exemplar_floor(assessment, minimum=EXEMPLAR_MINIMUM):
    if not core3(assessment).passed:
        return False
    if not frame_coherence(assessment):
        return False
    return sum(1 for item in EXEMPLAR_ELIGIBLE if assessment.disclosed(item)) >= minimum


def completeness(assessment, weights=None):
    """weighted Elicitation Completeness over items 7 to 11, not-applicable items dropped

    Reporting only; it never enters desk-reject logic. None when no item applies.
    """
    weights = weights or audit_setting('COMPLETENESS_WEIGHTS')
    weights = {int(item): float(weight) for item, weight in weights.items()}
    applicable = [item for item in COMPLETENESS_ITEMS if assessment.applicable(item)]
    total = sum(weights.get(item, 0.0) for item in applicable)
    if not applicable or total <= 0:
        return None
    return sum(weights.get(item, 0.0) for item in applicable if assessment.disclosed(item)) / total


# deriving an assessment from an extracted record

def _config_item(record, name):
    status = record.config_status(name)
    if status == Disclosure.DISCLOSED:
        return Disclosure.DISCLOSED
    if status == Disclosure.NOT_APPLICABLE:
        return Disclosure.NOT_APPLICABLE
    return Disclosure.UNDISCLOSED


def assess_record(record, model=None, eval_date=None):
    """builds an assessment from a PaperRecord and its resolved primary model

    Unextracted fields count as undisclosed. Item 13 has no extracted
    counterpart and stays undisclosed unless an assessment file says otherwise.
    """
    identified = model is not None
    reasoning = model.reasoning_at(eval_date or record.publication_date) if identified else None
    items = {number: Disclosure.UNDISCLOSED for number in ITEMS}
    if identified:
        # an exact identifier already encodes family and tier
        items[1] = items[4] = Disclosure.DISCLOSED
    for item, name in CONFIG_ITEMS.items():
        items[item] = _config_item(record, name)
    if record.eval_date_disclosed is not None:
        items[3] = Disclosure.DISCLOSED
    if record.declared_frame is not None:
        items[5] = Disclosure.DISCLOSED
    if record.human_comparator is not None:
        items[6] = Disclosure.DISCLOSED
    if reasoning is False:
        for item in REASONING_ITEMS:
            items[item] = Disclosure.NOT_APPLICABLE
    elif reasoning:
        for item in REASONING_ITEMS:
            if items[item] == Disclosure.NOT_APPLICABLE:
                items[item] = Disclosure.UNDISCLOSED
    if identified and not model.tool_capable:
        items[9] = Disclosure.NOT_APPLICABLE
    return ChecklistAssessment(
        items=items,
        declared_frame=record.declared_frame,
        tested_tier_is_frontier=model.is_frontier_tier if identified else None,
        reasoning_capable=reasoning,
        doi=record.doi,
    )


@dataclass(frozen=True)
class ChecklistSummary:
    assessment: ChecklistAssessment
    core3: Core3Verdict
    frame_coherent: bool
    exemplar: bool
    completeness: float
    disclosed: int

    def as_dict(self):
        return {
            'items': {str(item): self.assessment.items[item] for item in sorted(self.assessment.items)},
            'core3': str(self.core3),
            'frame_coherent': self.frame_coherent,
            'exemplar_floor': self.exemplar,
            'elicitation_completeness': self.completeness,
            'disclosed_items': self.disclosed,
        }


def summarize(assessment, weights=None):
    """checklist verdicts for a report; frame coherence is None when undecidable"""
    try:
        coherent = frame_coherence(assessment)
    except MissingFieldsError:
        coherent = None
    verdict = core3(assessment)
    return ChecklistSummary(
        assessment=assessment,
        core3=verdict,
        frame_coherent=coherent,
        exemplar=bool(verdict.passed and coherent and exemplar_floor(assessment)),
        completeness=completeness(assessment, weights),
        disclosed=sum(1 for item in ITEMS if assessment.disclosed(item)),
    )


def load_assessment(path):
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    serializer = ChecklistAssessmentSerializer(data=data)
    if not serializer.is_valid():
        raise ChecklistFileError('{}: {}'.format(path, describe_errors(serializer.errors)))
    values = serializer.validated_data
    return ChecklistAssessment(
        items=values['items'],
        declared_frame=values.get('declared_frame'),
        tested_tier_is_frontier=values.get('tested_tier_is_frontier'),
        reasoning_capable=values.get('reasoning_capable'),
        doi=values.get('doi', ''),
    )


# disclosure ladder

@dataclass(frozen=True)
class LadderRow:
    item: int
    conditioned: bool
    abstract_k: int
    abstract_n: int
    full_text_k: int
    full_text_n: int

    @property
    def abstract_rate(self):
        return self.abstract_k / float(self.abstract_n) if self.abstract_n else 0.0

    @property
    def full_text_rate(self):
        return self.full_text_k / float(self.full_text_n) if self.full_text_n else 0.0

    @property
    def lift_pp(self):
        """full-text minus abstract rate, in percentage points"""
        return 100.0 * (self.full_text_rate - self.abstract_rate)


def _surface_counts(assessments, item, conditioned):
    members = [assessment for assessment in assessments if not conditioned or assessment.applicable(item)]
    return sum(1 for assessment in members if assessment.disclosed(item)), len(members)


def disclosure_ladder(abstract, full_text, items=None):
    """per-item disclosure rates at the abstract and full-text surfaces

    Both arguments map DOI -> ChecklistAssessment. Items 7 and 9 also get a
    row whose denominators keep only papers where the item applies.
    """
    stray = sorted(set(full_text) - set(abstract))
    if stray:
        logger.warning('%d full-text assessments have no abstract counterpart', len(stray))
    rows = []
    for item in items or sorted(ITEMS):
        for conditioned in ((False, True) if item in CONDITIONED_ITEMS else (False,)):
            abstract_k, abstract_n = _surface_counts(abstract.values(), item, conditioned)
            full_k, full_n = _surface_counts(full_text.values(), item, conditioned)
            rows.append(LadderRow(item, conditioned, abstract_k, abstract_n, full_k, full_n))
    return rows


LADDER_HEADER = (
    'item', 'title', 'conditioned', 'abstract_k', 'abstract_n', 'abstract_rate', 'full_text_k', 'full_text_n',
    'full_text_rate', 'lift_pp',
)


def write_ladder_csv(rows, handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(LADDER_HEADER)
    for row in rows:
        writer.writerow([
            row.item, ITEMS[row.item], int(row.conditioned), row.abstract_k, row.abstract_n,
            '{:.4f}'.format(row.abstract_rate), row.full_text_k, row.full_text_n,
            '{:.4f}'.format(row.full_text_rate), '{:.1f}'.format(row.lift_pp),
        ])
