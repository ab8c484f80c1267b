"""
Multiplicative attenuation arithmetic for configuration downgrades.

A chip file lists a baseline row (index 0) followed by one row per downgrade,
each carrying the score after that downgrade. Retained fractions compound to
the final/baseline ratio whatever order the chips are applied in.
"""
import csv
import logging
import math
from dataclasses import dataclass

from audit.exceptions import ChipFileError, NonPositiveBeforeError
from audit.serializers import ChipRowSerializer, blank_to_none, describe_errors

logger = logging.getLogger(__name__)

PLOT_HEADER = ('index', 'label', 'before', 'after', 'retained_fraction', 'cumulative_fraction', 'evidence', 'caveat')


class Evidence(object):
    BASELINE = 'baseline'
    MEASURED = 'measured'
    BOUNDED = 'bounded'


def retained_fraction(before, after):
    if before <= 0:
        raise NonPositiveBeforeError('score before a downgrade must be positive, got {}'.format(before))
    return after / float(before)


def uniform_attenuation(g, k):
    """total retained when k axes each retain g"""
    if k < 0:
        raise ValueError('axis count must be non-negative')
    return g ** k


@dataclass(frozen=True)
class Chip:
    label: str
    before: float
    after: float
    evidence: str = Evidence.MEASURED
    caveat: str = None

    def __str__(self):
        return 'Chip<{}>'.format(self.label)

    @property
    def retained(self):
        return retained_fraction(self.before, self.after)


@dataclass(frozen=True)
class ChipSequence:
    baseline: float
    chips: tuple = ()
    baseline_label: str = 'baseline'

    def __post_init__(self):
        if self.baseline <= 0:
            raise NonPositiveBeforeError('waterfall baseline must be positive')
        previous = self.baseline
        for chip in self.chips:
            if chip.after <= 0:
                raise ValueError('{} has a non-positive score'.format(chip))
            if chip.after > chip.before:
                raise ValueError('{} raises the score; attenuation chips only lower it'.format(chip))
            if not math.isclose(chip.before, previous):
                raise ValueError(
                    '{} starts at {} but the previous step ended at {}'.format(chip, chip.before, previous)
                )
            previous = chip.after

    def __len__(self):
        return len(self.chips)

    def __iter__(self):
        return iter(self.chips)

    @property
    def final(self):
        return self.chips[-1].after if self.chips else self.baseline

    @classmethod
    def from_scores(cls, baseline, steps, baseline_label='baseline'):
        """builds chips from (label, after, evidence, caveat) tuples applied in order"""
        chips, before = [], baseline
        for label, after, evidence, caveat in steps:
            chips.append(Chip(label, before, after, evidence, caveat))
            before = after
        return cls(baseline=baseline, chips=tuple(chips), baseline_label=baseline_label)


def compound_total(sequence):
    """product of retained fractions, which telescopes to final / baseline"""
    if isinstance(sequence, ChipSequence):
        chips = sequence.chips
    else:
        chips = tuple(sequence)
    return math.prod(chip.retained for chip in chips)


def load_chips(path):
    """reads a chip CSV into a ChipSequence"""
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        rows = []
        for number, row in enumerate(csv.DictReader(handle), start=2):
            serializer = ChipRowSerializer(data=blank_to_none(row))
            if not serializer.is_valid():
                raise ChipFileError('{} line {}: {}'.format(path, number, describe_errors(serializer.errors)))
            rows.append(serializer.validated_data)
    rows.sort(key=lambda row: row['index'])
    if not rows or rows[0]['evidence'] != Evidence.BASELINE:
        raise ChipFileError('{} must start with a baseline row at index 0'.format(path))
    baseline = rows[0]
    sequence = ChipSequence.from_scores(
        baseline['score_after'],
        [(row['label'], row['score_after'], row['evidence'], row.get('caveat') or None) for row in rows[1:]],
        baseline_label=baseline['label'],
    )
    logger.info('loaded %d chips from %s', len(sequence), path)
    return sequence


def plot_rows(sequence):
    """one row per chip with the cumulative retained fraction, baseline first"""
    rows = [{
        'index': 0, 'label': sequence.baseline_label, 'before': sequence.baseline, 'after': sequence.baseline,
        'retained_fraction': 1.0, 'cumulative_fraction': 1.0, 'evidence': Evidence.BASELINE, 'caveat': '',
    }]
    cumulative = 1.0
    for index, chip in enumerate(sequence.chips, start=1):
        cumulative *= chip.retained
        rows.append({
            'index': index, 'label': chip.label, 'before': chip.before, 'after': chip.after,
            'retained_fraction': round(chip.retained, 6), 'cumulative_fraction': round(cumulative, 6),
            'evidence': chip.evidence, 'caveat': chip.caveat or '',
        })
    return rows


def write_plot_csv(sequence, handle):
    writer = csv.DictWriter(handle, fieldnames=PLOT_HEADER, lineterminator='\n')
    writer.writeheader()
    for row in plot_rows(sequence):
        writer.writerow(row)


def uniform_curve(gs=(0.95, 0.90), max_axes=9):
    """rows of (g, k, total) for the uniform-attenuation bars"""
    return [
        {'g': g, 'k': k, 'total': round(uniform_attenuation(g, k), 6)}
        for g in gs for k in range(max_axes + 1)
    ]
