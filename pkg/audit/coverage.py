"""
Coverage representativeness battery.

Compares the in-corpus sample against a classifier-included residual sample
drawn from the topic universe the keyword query missed. The comparison is
descriptive and never reweights the primary analysis.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from audit import stats
from audit.exceptions import AuditError
from audit.records import Framing, Valence
from audit.resolver import ModelMention, is_resolved, normalize, resolve

logger = logging.getLogger(__name__)

TOKEN_SHARE_FLOOR = 0.01
TOP_TOKENS = 12
DAYS_PER_MONTH = 365.25 / 12


class Family(object):
    INCLUSION = 'inclusion_rate'
    VALENCE = 'valence'
    FRAMING = 'framing'
    MODEL_TOKEN = 'model_token'
    GAP_PROXY = 'gap_proxy'
    EVAL_DATE = 'eval_date_disclosure'


@dataclass(frozen=True)
class CoverageTest:
    family: str
    cell: str
    residual_share: float
    corpus_share: float
    p: float
    survives: bool = False
    statistic: float = None

    @property
    def shift_pp(self):
        """residual minus in-corpus share, in percentage points"""
        if self.residual_share is None or self.corpus_share is None:
            return None
        return 100.0 * (self.residual_share - self.corpus_share)


@dataclass(frozen=True)
class CaptureEstimate:
    residual_k: int
    residual_n: int
    residual_population: int
    corpus_count: int
    rate: float
    rate_ci: tuple
    additional: float
    additional_ci: tuple
    capture: float
    capture_ci: tuple


@dataclass(frozen=True)
class CoverageReport:
    tests: tuple
    k: int
    per_test_alpha: float
    omnibus: dict = field(default_factory=dict)
    gap_proxy: dict = field(default_factory=dict)
    capture: CaptureEstimate = None

    @property
    def survivors(self):
        return [test for test in self.tests if test.survives]


def capture_rate(residual_k, residual_n, residual_population, corpus_count, conf=0.95):
    """extrapolates the residual inclusion rate to the residual population

    The capture interval maps the Wilson bounds of the rate through
    corpus / (corpus + population * rate).
    """
    rate = residual_k / float(residual_n)
    low, high = stats.wilson_ci(residual_k, residual_n, conf)
    additional = residual_population * rate

    def captured(extra):
        return corpus_count / float(corpus_count + extra)

    return CaptureEstimate(
        residual_k=residual_k,
        residual_n=residual_n,
        residual_population=residual_population,
        corpus_count=corpus_count,
        rate=rate,
        rate_ci=(low, high),
        additional=additional,
        additional_ci=(residual_population * low, residual_population * high),
        capture=captured(additional),
        capture_ci=(captured(residual_population * high), captured(residual_population * low)),
    )


def gap_proxy_months(record, table, aliases, scale=None):
    """months from the primary model's release to the middle of the publication year"""
    raw = record.primary_model or record.primary_model_raw
    if not (raw or '').strip():
        return None
    key = resolve(ModelMention(raw, record.publication_date), aliases, table)
    if not is_resolved(key):
        return None
    release = table.get(key).release_date
    midpoint = date(record.publication_date.year, 7, 1)
    return (midpoint - release).days / DAYS_PER_MONTH


def model_token(record):
    raw = record.primary_model_raw or record.primary_model or ''
    return normalize(raw) or 'unspecified'


def _cell_test(family, cell, residual_k, residual_n, corpus_k, corpus_n):
    result = stats.two_proportion_z(residual_k, residual_n, corpus_k, corpus_n)
    return CoverageTest(
        family=family, cell=cell, residual_share=residual_k / float(residual_n),
        corpus_share=corpus_k / float(corpus_n), p=result.p_value, statistic=result.statistic,
    )


def _categorical_tests(family, levels, residual_labels, corpus_labels):
    residual = [label for label in residual_labels if label is not None]
    corpus = [label for label in corpus_labels if label is not None]
    if not residual or not corpus:
        return [], None
    residual_counts, corpus_counts = Counter(residual), Counter(corpus)
    tests = []
    for level in levels:
        try:
            tests.append(_cell_test(family, level, residual_counts[level], len(residual),
                                    corpus_counts[level], len(corpus)))
        except AuditError as ex:
            logger.info('%s cell %s skipped: %s', family, level, ex)
    try:
        omnibus = stats.chi_square([
            [residual_counts[level] for level in levels],
            [corpus_counts[level] for level in levels],
        ])
    except AuditError as ex:
        logger.info('%s omnibus skipped: %s', family, ex)
        omnibus = None
    return tests, omnibus


def coverage_battery(corpus, residual, corpus_inclusion, residual_inclusion, table=None, aliases=None,
                     alpha=0.05, k=None, share_floor=TOKEN_SHARE_FLOOR, top_tokens=TOP_TOKENS,
                     residual_population=None):
    """runs the representativeness family and applies Bonferroni at family size k

    corpus and residual are included PaperRecords; the inclusion arguments are
    (included, classified-relevant) counts for each pool. k defaults to the
    number of tests actually run.
    """
    tests = [_cell_test(Family.INCLUSION, 'included', *residual_inclusion, *corpus_inclusion)]
    omnibus = {}

    valence_tests, valence_omnibus = _categorical_tests(
        Family.VALENCE, Valence.values(),
        [record.conclusion_valence for record in residual], [record.conclusion_valence for record in corpus],
    )
    framing_tests, framing_omnibus = _categorical_tests(
        Family.FRAMING, Framing.values(),
        [record.conclusion_framing for record in residual], [record.conclusion_framing for record in corpus],
    )
    tests += valence_tests + framing_tests
    if valence_omnibus is not None:
        omnibus[Family.VALENCE] = valence_omnibus
    if framing_omnibus is not None:
        omnibus[Family.FRAMING] = framing_omnibus

    corpus_tokens = Counter(model_token(record) for record in corpus)
    residual_tokens = Counter(model_token(record) for record in residual)
    ranked = sorted(corpus_tokens.items(), key=lambda item: (-item[1], item[0]))
    for token, count in ranked[:top_tokens]:
        if count / float(len(corpus)) < share_floor:
            break
        try:
            tests.append(_cell_test(Family.MODEL_TOKEN, token, residual_tokens[token], len(residual),
                                    count, len(corpus)))
        except AuditError as ex:
            logger.info('token cell %s skipped: %s', token, ex)

    gap_proxy = {}
    if table is not None and aliases is not None:
        residual_gaps = [gap for gap in (gap_proxy_months(r, table, aliases) for r in residual) if gap is not None]
        corpus_gaps = [gap for gap in (gap_proxy_months(r, table, aliases) for r in corpus) if gap is not None]
        if residual_gaps and corpus_gaps:
            result = stats.mann_whitney_u(residual_gaps, corpus_gaps)
            tests.append(CoverageTest(
                family=Family.GAP_PROXY, cell='months', residual_share=None, corpus_share=None,
                p=result.p_value, statistic=result.statistic,
            ))
            for name, values in (('residual', residual_gaps), ('corpus', corpus_gaps)):
                median, iqr = stats.median_iqr(values)
                gap_proxy[name] = {'n': len(values), 'median': median, 'mean': float(np.mean(values)), 'iqr': iqr}

    disclosed = [
        (sum(1 for record in pool if record.eval_date_disclosed is not None), len(pool))
        for pool in (residual, corpus)
    ]
    if disclosed[0][1] and disclosed[1][1]:
        try:
            tests.append(_cell_test(Family.EVAL_DATE, 'disclosed', *disclosed[0], *disclosed[1]))
        except AuditError as ex:
            logger.info('eval-date disclosure test skipped: %s', ex)

    k = k or len(tests)
    threshold = stats.bonferroni_threshold(alpha, k)
    tests = [
        CoverageTest(test.family, test.cell, test.residual_share, test.corpus_share, test.p, test.p <= threshold,
                     test.statistic)
        for test in tests
    ]
    capture = None
    if residual_population is not None:
        capture = capture_rate(residual_inclusion[0], residual_inclusion[1], residual_population, len(corpus),
                               1 - alpha)
    logger.info('coverage family of %d tests, %d survive at %.4f', k, sum(test.survives for test in tests), threshold)
    return CoverageReport(
        tests=tuple(tests), k=k, per_test_alpha=threshold, omnibus=omnibus, gap_proxy=gap_proxy, capture=capture,
    )
