"""
Pre-registered hypothesis battery.

Every function takes PaperAudits (see audit.pipeline) plus an AuditContext and
returns HypothesisReports whose spec_tags name the analytic path taken.
Resampling goes through SeededRng streams, so a fixed seed reproduces every
interval whatever the worker count.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy import optimize
from scipy import stats as sps

from audit import stats
from audit.capability import LookupPolicy
from audit.exceptions import (
    AuditError, DegenerateConfusionError, EmptyDenominatorError, EmptyFrontierError, MissingClassError,
    NoPricedBaseError, ProductTooLargeError, RankDeficientError, TooFewClustersError, UnknownDomainError,
)
from audit.failure import Denominator, InterpretiveMode, TriBool, corpus_rates, in_denominator
from audit.frontier import Frontier, Variant
from audit.gaps import MissingConfig, RoutingTreatment, excess_lag
from audit.pipeline import (
    InclusionArm, ModelAge, audit_corpus, confident, direct_scores_only, in_cohort, select_inclusion,
)
from audit.records import Framing, Valence

logger = logging.getLogger(__name__)

DECISION_REJECT_FRACTION = 0.75


class Hypothesis(object):
    H1 = 'H1'
    H2 = 'H2'
    H3 = 'H3'
    H4 = 'H4'
    H5 = 'H5'
    H6 = 'H6'
    H8 = 'H8'
    H10 = 'H10'
    CLASS_SHARE = 'class_share'
    CLASS_SHARE_CORRECTED = 'class_share_corrected'
    CLASS_SHARE_TREND = 'class_share_trend'


class ValenceEncoding(object):
    CATEGORICAL = 'categorical'
    LINEAR = 'linear'

    @classmethod
    def values(cls):
        return cls.CATEGORICAL, cls.LINEAR


class ValenceEstimator(object):
    CLUSTER_OLS = 'cluster_ols'
    RANDOM_INTERCEPT = 'random_intercept'

    @classmethod
    def values(cls):
        return cls.CLUSTER_OLS, cls.RANDOM_INTERCEPT


class ShareMode(object):
    MARGINAL_POSTERIOR = 'marginal_posterior'
    THRESHOLD_INDICATOR = 'threshold_indicator'
    EXPECTED_VALUE = 'expected_value'

    @classmethod
    def values(cls):
        return cls.MARGINAL_POSTERIOR, cls.THRESHOLD_INDICATOR, cls.EXPECTED_VALUE


class PermutationScheme(object):
    SIGN_FLIP = 'sign_flip'
    YEAR_SHUFFLE = 'year_shuffle'

    @classmethod
    def values(cls):
        return cls.SIGN_FLIP, cls.YEAR_SHUFFLE


@dataclass(frozen=True)
class HypothesisReport:
    """one hypothesis' estimate, interval and test under a named analytic path"""
    id: str
    estimate: float
    ci: tuple
    n: int
    p: float = None
    post_holm_reject: bool = None
    method: str = ''
    spec_tags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __str__(self):
        return 'HypothesisReport<{} {}>'.format(self.id, self.estimate)


# resampling

def bootstrap(statistic, n, draws, rng, stream, workers=1):
    """statistic(indices) over case-resampled index vectors"""
    def one(b, generator):
        return statistic(generator.integers(0, n, size=n))

    return rng.map(one, draws, stream, workers)


def cluster_bootstrap(statistic, clusters, draws, rng, stream, workers=1):
    """statistic(indices) over whole-cluster resamples; failed replicates are skipped"""
    codes = stats._group_codes(clusters)
    groups = [np.flatnonzero(codes == code) for code in range(int(codes.max()) + 1)]
    if len(groups) < 2:
        raise TooFewClustersError('a cluster bootstrap needs at least two clusters')

    def one(b, generator):
        chosen = generator.integers(0, len(groups), size=len(groups))
        indices = np.concatenate([groups[code] for code in chosen])
        try:
            return statistic(indices)
        except AuditError:
            return None

    results = rng.map(one, draws, stream, workers)
    kept = [result for result in results if result is not None]
    if len(kept) < len(results):
        logger.info('%s: %d of %d cluster replicates skipped', stream, len(results) - len(kept), len(results))
    return kept


def _interval(draws, conf, fallback):
    if not draws:
        return fallback
    return stats.percentile_interval(draws, conf)


def _wald_interval(estimate, se, conf=0.95):
    z = sps.norm.ppf(1 - (1 - conf) / 2.0)
    return estimate - z * se, estimate + z * se


def _two_sided(estimate, se):
    if se == 0:
        return 0.0 if estimate != 0 else 1.0
    return float(min(1.0, 2 * sps.norm.sf(abs(estimate / se))))


# location hypotheses

def _location_report(hypothesis, values, context, rng, extra_tags=None):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyDenominatorError('{} has no papers with a computable value'.format(hypothesis))
    test = stats.wilcoxon_signed_rank(values, 0.0, stats.Side.GREATER)
    median, iqr = stats.median_iqr(values)
    draws = bootstrap(
        lambda indices: float(np.median(values[indices])), values.size, context.bootstrap_draws, rng,
        'bootstrap:{}'.format(hypothesis), context.workers,
    ) if rng is not None else []
    tags = dict(context.spec_tags())
    tags.update(extra_tags or {})
    return HypothesisReport(
        id=hypothesis,
        estimate=median,
        ci=_interval(draws, 1 - context.alpha, (median, median)),
        n=int(values.size),
        p=test.p_value,
        method='wilcoxon_{}'.format(test.method),
        spec_tags=tags,
        extra={'iqr': iqr, 'w_plus': test.statistic},
    )


def h1_temporal_gap(audits, context, rng=None):
    """median temporal gap tested against zero"""
    return _location_report(Hypothesis.H1, [audit.gap for audit in audits if audit.gap is not None], context, rng)


def h3_tier_gap(audits, context, rng=None):
    """median tier gap over dyad-eligible papers"""
    dyads = [audit.tier_gap for audit in audits if audit.tier_gap is not None]
    return _location_report(Hypothesis.H3, dyads, context, rng, {'dyad_eligible': len(dyads)})


# valence asymmetry

def valence_design(years, domains, valences, encoding=ValenceEncoding.CATEGORICAL):
    """domain x year design plus valence columns, and the negative-vs-positive contrast weights"""
    if encoding not in ValenceEncoding.values():
        raise ValueError('unknown valence encoding "{}"'.format(encoding))
    present = set(valences)
    if encoding == ValenceEncoding.CATEGORICAL:
        if Valence.NEGATIVE not in present or Valence.POSITIVE not in present:
            raise MissingClassError('the valence contrast needs negative and positive papers')
        extra = {}
        for level in (Valence.NEGATIVE, Valence.MIXED, Valence.NEUTRAL):
            if level in present:
                extra['valence[{}]'.format(level)] = [1.0 if valence == level else 0.0 for valence in valences]
        contrast = {'valence[{}]'.format(Valence.NEGATIVE): 1.0}
    else:
        if len(present) < 2:
            raise MissingClassError('the linear valence encoding needs two valence classes')
        extra = {'valence_linear': [Valence.LINEAR[valence] for valence in valences]}
        # negative sits three steps above positive on the linear collapse
        contrast = {'valence_linear': Valence.LINEAR[Valence.NEGATIVE] - Valence.LINEAR[Valence.POSITIVE]}
    X, names, _ = stats.domain_year_design(years, domains, extra)
    return X, names, contrast


def _contrast(fit, weights):
    vector = np.zeros(len(fit.names))
    for name, weight in weights.items():
        vector[fit.names.index(name)] = weight
    return float(vector @ fit.coef), float(math.sqrt(max(vector @ fit.cov @ vector, 0.0)))


@dataclass(frozen=True)
class RandomInterceptFit:
    fit: stats.OlsFit
    residual_variance: float
    intercept_variance: float
    log_likelihood: float
    groups: int


def random_intercept_fit(y, X, names, groups):
    """Gaussian random-intercept model fitted by profile maximum likelihood

    The variance ratio is profiled out with a bounded scalar search on its
    log; fixed effects are the GLS solution at the optimum.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficientError('random-intercept design is not of full column rank')
    codes = stats._group_codes(groups)
    count = int(codes.max()) + 1
    if count < 2:
        raise TooFewClustersError('a random intercept needs at least two groups')
    sizes = np.bincount(codes, minlength=count).astype(float)
    sum_x = np.zeros((count, p))
    np.add.at(sum_x, codes, X)
    sum_y = np.bincount(codes, weights=y, minlength=count)
    xtx, xty = X.T @ X, X.T @ y

    def profile(log_ratio):
        ratio = math.exp(log_ratio)
        shrink = ratio / (1 + ratio * sizes)
        information = xtx - (sum_x.T * shrink) @ sum_x
        beta = np.linalg.solve(information, xty - sum_x.T @ (shrink * sum_y))
        residuals = y - X @ beta
        group_residuals = sum_y - sum_x @ beta
        quadratic = residuals @ residuals - (shrink * group_residuals ** 2).sum()
        sigma2 = max(quadratic / n, 1e-300)
        deviance = n * math.log(sigma2) + np.log1p(ratio * sizes).sum()
        return deviance, beta, sigma2, information, residuals

    result = optimize.minimize_scalar(lambda value: profile(value)[0], bounds=(-12.0, 6.0), method='bounded')
    deviance, beta, sigma2, information, residuals = profile(result.x)
    fit = stats.OlsFit(
        names=tuple(names), coef=beta, cov=sigma2 * np.linalg.inv(information), residuals=residuals, n=n,
        se_kind='random_intercept',
    )
    return RandomInterceptFit(
        fit=fit,
        residual_variance=sigma2,
        intercept_variance=sigma2 * math.exp(result.x),
        log_likelihood=-0.5 * (deviance + n * (1 + math.log(2 * math.pi))),
        groups=count,
    )


def _valence_rows(audits):
    return [audit for audit in audits if audit.gap is not None and audit.valence is not None]


def valence_contrast(audits, valences=None, encoding=ValenceEncoding.CATEGORICAL,
                     estimator=ValenceEstimator.CLUSTER_OLS, se=stats.SE.CLUSTER):
    """(estimate, standard error, n) of the negative-vs-positive gap contrast

    valences, when given, replaces the coded labels of the usable papers in order.
    """
    if estimator not in ValenceEstimator.values():
        raise ValueError('unknown valence estimator "{}"'.format(estimator))
    rows = _valence_rows(audits)
    labels = list(valences) if valences is not None else [audit.valence for audit in rows]
    if len(labels) != len(rows):
        raise ValueError('expected {} valence labels, got {}'.format(len(rows), len(labels)))
    X, names, weights = valence_design(
        [audit.year for audit in rows], [audit.domain for audit in rows], labels, encoding,
    )
    y = [audit.gap for audit in rows]
    journals = [audit.journal for audit in rows]
    if estimator == ValenceEstimator.RANDOM_INTERCEPT:
        fit = random_intercept_fit(y, X, names, journals).fit
    else:
        fit = stats.ols(y, X, names, se=se, clusters=journals if se == stats.SE.CLUSTER else None)
    estimate, std_error = _contrast(fit, weights)
    return estimate, std_error, len(rows)


def h6_valence_model(audits, context, rng=None, estimator=ValenceEstimator.CLUSTER_OLS,
                     encoding=ValenceEncoding.CATEGORICAL, se=stats.SE.CLUSTER):
    """gap contrast between negative- and positive-valence conclusions

    cluster_ols reports a journal-cluster bootstrap interval when an rng is
    given; random_intercept reports the profile-likelihood Wald interval.
    """
    estimate, std_error, n = valence_contrast(audits, None, encoding, estimator, se)
    conf = 1 - context.alpha
    ci = _wald_interval(estimate, std_error, conf)
    method = '{}_wald'.format(estimator)
    if estimator == ValenceEstimator.CLUSTER_OLS and rng is not None:
        rows = _valence_rows(audits)

        def statistic(indices):
            sample = [rows[index] for index in indices]
            return valence_contrast(sample, None, encoding, estimator, stats.SE.CLASSICAL)[0]

        draws = cluster_bootstrap(
            statistic, [audit.journal for audit in rows], context.bootstrap_draws, rng, 'bootstrap:H6',
            context.workers,
        )
        ci = _interval(draws, conf, ci)
        method = 'cluster_ols_journal_bootstrap'
    counts = {}
    for audit in _valence_rows(audits):
        counts[audit.valence] = counts.get(audit.valence, 0) + 1
    tags = dict(context.spec_tags())
    tags.update({'valence_estimator': estimator, 'valence_encoding': encoding, 'standard_errors': se})
    return HypothesisReport(
        id=Hypothesis.H6,
        estimate=estimate,
        ci=ci,
        n=n,
        p=_two_sided(estimate, std_error),
        method=method,
        spec_tags=tags,
        extra={'std_error': std_error, 'classes': dict(sorted(counts.items()))},
    )


@dataclass(frozen=True)
class MeasurementErrorResult:
    point: float
    direction_intact: float
    draws: int
    failed: int


def measurement_error_sim(contrast, labels, confusion, draws, rng, workers=1):
    """share of relabelled draws whose contrast keeps the point estimate's sign

    Each draw replaces every observed label by a gold label sampled from the
    confusion matrix column of that observed label. Draws whose contrast
    cannot be computed count as not intact.
    """
    labels = list(labels)
    point = contrast(labels)
    sign = np.sign(point)
    conditional = confusion.gold_given_observed()
    positions = {}
    for position, label in enumerate(labels):
        positions.setdefault(label, []).append(position)

    def one(b, generator):
        drawn = list(labels)
        for label in confusion.labels:
            members = positions.get(label)
            if not members:
                continue
            column = conditional[:, confusion.index(label)]
            if column.sum() <= 0:
                continue
            picks = generator.choice(len(confusion.labels), size=len(members), p=column / column.sum())
            for position, pick in zip(members, picks):
                drawn[position] = confusion.labels[pick]
        try:
            return bool(np.sign(contrast(drawn)) == sign)
        except AuditError:
            return None

    outcomes = rng.map(one, draws, 'measurement_error', workers)
    failed = sum(1 for outcome in outcomes if outcome is None)
    intact = sum(1 for outcome in outcomes if outcome)
    return MeasurementErrorResult(
        point=point, direction_intact=intact / float(draws) if draws else 1.0, draws=draws, failed=failed,
    )


def valence_measurement_error(audits, context, rng, encoding=ValenceEncoding.CATEGORICAL,
                              estimator=ValenceEstimator.CLUSTER_OLS):
    rows = _valence_rows(audits)

    def contrast(labels):
        return valence_contrast(rows, labels, encoding, estimator, stats.SE.CLASSICAL)[0]

    return measurement_error_sim(
        contrast, [audit.valence for audit in rows], context.valence_confusion, context.measurement_error_draws,
        rng, context.workers,
    )


# misclassification-corrected share

@dataclass(frozen=True)
class ShareResult:
    share: float
    ci: tuple
    raw_share: float
    n: int
    mode: str
    posteriors: dict


def framing_posteriors(confusion, positive=Framing.AI_GENERIC):
    """P(gold = positive | observed) for each observed label

    The prior is the gold marginal of the confusion matrix and the likelihood
    its row-normalized counts.
    """
    counts = np.asarray(confusion.counts, dtype=float)
    if counts.shape != (2, 2):
        raise DegenerateConfusionError('the framing correction needs a 2 x 2 confusion matrix')
    rows = counts.sum(axis=1)
    if (rows <= 0).any():
        raise DegenerateConfusionError('every gold class needs at least one validation item')
    prior = rows / rows.sum()
    joint = prior[:, None] * (counts / rows[:, None])
    evidence = joint.sum(axis=0)
    target = confusion.index(positive)
    return {
        label: (float(joint[target, column] / evidence[column]) if evidence[column] > 0 else None)
        for column, label in enumerate(confusion.labels)
    }


def _share(observed, posteriors, mode):
    values = []
    for label in observed:
        posterior = posteriors.get(label)
        if posterior is None:
            raise DegenerateConfusionError('observed label "{}" has no validation support'.format(label))
        values.append(posterior > 0.5 if mode == ShareMode.THRESHOLD_INDICATOR else posterior)
    return float(np.mean(values))


def bayes_corrected_share(framings, confusion, mode=ShareMode.MARGINAL_POSTERIOR, draws=0, rng=None, conf=0.95,
                          positive=Framing.AI_GENERIC):
    """share of papers whose gold framing is positive, corrected through confusion

    The interval resamples papers and, independently, each gold row of the
    confusion counts.
    """
    if mode not in ShareMode.values():
        raise ValueError('unknown share mode "{}"'.format(mode))
    observed = [label for label in framings if label is not None]
    if not observed:
        raise EmptyDenominatorError('no paper carries a coded framing')
    posteriors = framing_posteriors(confusion, positive)
    share = _share(observed, posteriors, mode)
    raw = sum(1 for label in observed if label == positive) / float(len(observed))
    ci = (share, share)
    if draws and rng is not None:
        counts = np.asarray(confusion.counts, dtype=float)
        totals = counts.sum(axis=1).astype(int)
        observed_array = np.asarray(observed, dtype=object)

        def one(b, generator):
            resampled = np.vstack([
                generator.multinomial(totals[row], counts[row] / counts[row].sum())
                for row in range(counts.shape[0])
            ])
            sample = observed_array[generator.integers(0, len(observed), size=len(observed))]
            try:
                redrawn = stats.ConfusionMatrix(confusion.labels, resampled)
                return _share(sample, framing_posteriors(redrawn, positive), mode)
            except AuditError:
                return None

        results = [result for result in rng.map(one, draws, 'bayes_share:{}'.format(mode)) if result is not None]
        ci = _interval(results, conf, ci)
    return ShareResult(share=share, ci=ci, raw_share=raw, n=len(observed), mode=mode, posteriors=posteriors)


def corrected_compound_rate(audits, context, mode=ShareMode.EXPECTED_VALUE, denominator=Denominator.TRIVALUED):
    """compound-failure rate with the framing clause replaced by its posterior

    threshold_indicator re-codes each framing by posterior > 0.5;
    expected_value counts each paper by its posterior probability of failing.
    """
    posteriors = framing_posteriors(context.framing_confusion)
    classifier = context.classifier()
    expected, members = 0.0, 0
    for audit in audits:
        framing = audit.framing
        if framing is None or not in_denominator(audit.verdict, denominator):
            continue
        members += 1
        posterior = posteriors[framing]
        as_generic = classifier.classify(replace(audit.record, conclusion_framing=Framing.AI_GENERIC), audit.vector)
        as_specific = classifier.classify(
            replace(audit.record, conclusion_framing=Framing.MODEL_SPECIFIC), audit.vector,
        )
        generic_fails = as_generic.compound is TriBool.TRUE
        specific_fails = as_specific.compound is TriBool.TRUE
        if mode == ShareMode.THRESHOLD_INDICATOR:
            expected += generic_fails if posterior > 0.5 else specific_fails
        else:
            expected += posterior * generic_fails + (1 - posterior) * specific_fails
    if not members:
        raise EmptyDenominatorError('no framed papers fall in the {} denominator'.format(denominator))
    rate = expected / members
    return rate, stats.wilson_ci(expected, members, 1 - context.alpha), expected, members


# permutation null

@dataclass(frozen=True)
class PermutationResult:
    observed: float
    null: tuple
    percentile: float
    scheme: str


def permutation_null(statistic, values, scheme=PermutationScheme.SIGN_FLIP, draws=1000, rng=None, years=None,
                     workers=1):
    """null distribution of statistic under the sharp null

    sign_flip calls statistic(values) with random signs; year_shuffle calls
    statistic(values, years) with years permuted. The percentile is the share
    of null draws at or below the observed value.
    """
    if scheme not in PermutationScheme.values():
        raise ValueError('unknown permutation scheme "{}"'.format(scheme))
    if rng is None:
        raise ValueError('a permutation null needs a SeededRng')
    values = np.asarray(values, dtype=float)
    if scheme == PermutationScheme.SIGN_FLIP:
        observed = statistic(values)

        def one(b, generator):
            return statistic(values * generator.choice((-1.0, 1.0), size=values.size))
    else:
        if years is None:
            raise ValueError('the year-shuffle null needs publication years')
        years = np.asarray(years, dtype=float)
        observed = statistic(values, years)

        def one(b, generator):
            return statistic(values, generator.permutation(years))

    null = np.asarray(rng.map(one, draws, 'permutation:{}'.format(scheme), workers), dtype=float)
    percentile = float(np.mean(null <= observed)) if null.size else 1.0
    return PermutationResult(observed=float(observed), null=tuple(null.tolist()), percentile=percentile, scheme=scheme)


# widening trend

def _slope_rows(audits):
    rows = [audit for audit in audits if audit.gap is not None]
    journals = {audit.journal for audit in rows}
    years = {audit.record.publication_date.year for audit in rows}
    if len(journals) < 2 or len(years) < 2:
        raise TooFewClustersError('the pooled slope needs at least two journals and two publication years')
    return rows


def _pooled(rows, se=stats.SE.CLASSICAL):
    return stats.pooled_domain_slope(
        [audit.gap for audit in rows], [audit.year for audit in rows], [audit.domain for audit in rows], se=se,
        clusters=[audit.journal for audit in rows] if se == stats.SE.CLUSTER else None,
    )


def h2_pooled_slope(audits, context, rng=None, se=stats.SE.HC3):
    """n-weighted pooled per-domain year slope with a journal-cluster bootstrap interval

    A negative interval excluding zero trips the directional falsifier.
    """
    rows = _slope_rows(audits)
    slopes = _pooled(rows, se)
    conf = 1 - context.alpha
    ci = _wald_interval(slopes.pooled, slopes.pooled_se, conf)
    method = 'ols_{}'.format(se)
    if rng is not None:
        draws = cluster_bootstrap(
            lambda indices: _pooled([rows[index] for index in indices]).pooled,
            [audit.journal for audit in rows], context.bootstrap_draws, rng, 'bootstrap:H2', context.workers,
        )
        ci = _interval(draws, conf, ci)
        method = 'ols_journal_bootstrap'
    tags = dict(context.spec_tags())
    tags['standard_errors'] = se
    return HypothesisReport(
        id=Hypothesis.H2,
        estimate=slopes.pooled,
        ci=ci,
        n=len(rows),
        p=_two_sided(slopes.pooled, slopes.pooled_se),
        method=method,
        spec_tags=tags,
        extra={
            'per_domain': dict(sorted(slopes.per_domain.items())),
            'counts': dict(sorted(slopes.counts.items())),
            'falsifier': bool(ci[1] < 0),
        },
    )


# confirmatory family

def run_confirmatory_family(audits, context, rng=None, estimator=ValenceEstimator.CLUSTER_OLS,
                            encoding=ValenceEncoding.CATEGORICAL, gate=True):
    """H1, H3 and H6 under Holm; H6 also needs its measurement-error gate to reject"""
    rng = rng or context.rng()
    reports = [
        h1_temporal_gap(audits, context, rng),
        h3_tier_gap(audits, context, rng),
        h6_valence_model(audits, context, rng, estimator, encoding),
    ]
    adjusted, flags = stats.holm_stepdown([report.p for report in reports], context.alpha)
    family = []
    for report, p_holm, flag in zip(reports, adjusted, flags):
        extra = dict(report.extra, p_holm=p_holm)
        if report.id == Hypothesis.H6 and gate:
            simulation = valence_measurement_error(audits, context, rng, encoding, estimator)
            extra['direction_intact'] = simulation.direction_intact
            extra['gate'] = context.measurement_error_gate
            flag = flag and simulation.direction_intact >= context.measurement_error_gate
        family.append(replace(report, post_holm_reject=bool(flag), extra=extra))
    return family


# descriptive family

def h4_counts(audits, missing=MissingConfig.AS_MISSING):
    """(disclosed, eligible) reasoning-mode disclosure among reasoning-capable evaluations

    Under null_as_undisclosed a missing reasoning_mode field counts as undisclosed
    instead of leaving the denominator.
    """
    keep_missing = missing == MissingConfig.AS_UNDISCLOSED
    eligible = [
        audit for audit in audits
        if audit.reasoning_capable and (keep_missing or audit.reasoning_disclosed is not None)
    ]
    return sum(1 for audit in eligible if audit.reasoning_disclosed), len(eligible)


def class_share_counts(audits):
    framed = [audit for audit in audits if audit.framing is not None]
    return sum(1 for audit in framed if audit.framing == Framing.AI_GENERIC), len(framed)


def h5_rate(audits, denominator=Denominator.ADMISSIBILITY_EXPECTED, conf=0.95):
    return corpus_rates([audit.verdict for audit in audits], denominator, conf)


def run_descriptive_family(audits, context, denominator=Denominator.ADMISSIBILITY_EXPECTED):
    """H4, H5 and the class-level claim share under simultaneous Wilson intervals"""
    verdicts = [audit.verdict for audit in audits]
    h5_members = [verdict for verdict in verdicts if in_denominator(verdict, denominator)]
    members = [
        (Hypothesis.H4, h4_counts(audits)),
        (Hypothesis.H5, (sum(1 for verdict in h5_members if verdict.compound is TriBool.TRUE), len(h5_members))),
        (Hypothesis.CLASS_SHARE, class_share_counts(audits)),
    ]
    usable = [(name, counts) for name, counts in members if counts[1] > 0]
    intervals = dict(zip(
        [name for name, _ in usable],
        stats.simultaneous_cis([counts for _, counts in usable], context.alpha, m=len(members)),
    )) if usable else {}
    tags = dict(context.spec_tags())
    reports = []
    for name, (k, n) in members:
        interval = intervals.get(name)
        extra = {'k': k}
        if name == Hypothesis.H5:
            extra['denominator'] = denominator
        reports.append(HypothesisReport(
            id=name,
            estimate=interval.estimate if interval else None,
            ci=(interval.low, interval.high) if interval else (None, None),
            n=n,
            method=interval.method if interval else 'empty',
            spec_tags=tags,
            extra=extra,
        ))
    return reports


def class_share_corrected(audits, context, rng=None, mode=ShareMode.MARGINAL_POSTERIOR):
    result = bayes_corrected_share(
        [audit.framing for audit in audits], context.framing_confusion, mode,
        draws=context.bootstrap_draws if rng is not None else 0, rng=rng, conf=1 - context.alpha,
    )
    tags = dict(context.spec_tags(), share_mode=mode)
    compound = {}
    for rate_mode in (ShareMode.THRESHOLD_INDICATOR, ShareMode.EXPECTED_VALUE):
        try:
            rate, ci, _, members = corrected_compound_rate(audits, context, rate_mode)
        except EmptyDenominatorError as ex:
            compound[rate_mode] = {'error': str(ex)}
            continue
        compound[rate_mode] = {'rate': rate, 'ci': list(ci), 'n': members}
    return HypothesisReport(
        id=Hypothesis.CLASS_SHARE_CORRECTED,
        estimate=result.share,
        ci=result.ci,
        n=result.n,
        method='bayes_{}'.format(mode),
        spec_tags=tags,
        extra={'raw_share': result.raw_share, 'posteriors': result.posteriors, 'compound_rate': compound},
    )


def class_share_trend(audits, context):
    """per-year odds ratio of ai_generic framing"""
    framed = [audit for audit in audits if audit.framing is not None]
    fit = stats.logit(
        [1.0 if audit.framing == Framing.AI_GENERIC else 0.0 for audit in framed],
        [audit.year for audit in framed],
        conf=1 - context.alpha,
    )
    odds_ratio, ci = fit.odds_ratio('year')
    return HypothesisReport(
        id=Hypothesis.CLASS_SHARE_TREND,
        estimate=odds_ratio,
        ci=ci,
        n=fit.n,
        p=_two_sided(fit.coefficient('year'), fit.std_error('year')),
        method='logit_irls_wald',
        spec_tags=dict(context.spec_tags()),
        extra={'iterations': fit.iterations},
    )


def h8_excess_lag(audits, context, rng=None):
    """observed gap beyond the frontier movement over each domain's review latency"""
    frontier = Frontier(context.table, context.scale, Variant.ABSOLUTE)
    excesses, implied = [], []
    for audit in audits:
        if audit.vector is None:
            continue
        try:
            excess = excess_lag(audit.vector, audit.record, context.lag_medians, frontier)
        except (UnknownDomainError, EmptyFrontierError) as ex:
            logger.info('%s: no rational-lag baseline (%s)', audit, ex)
            continue
        excesses.append(excess)
        implied.append(audit.gap - excess)
    if not excesses:
        raise EmptyDenominatorError('no paper has a rational-lag baseline')
    values = np.asarray(excesses)
    median = float(np.median(values))
    draws = bootstrap(
        lambda indices: float(np.median(values[indices])), values.size, context.bootstrap_draws, rng,
        'bootstrap:H8', context.workers,
    ) if rng is not None else []
    median_gap = float(np.median([audit.gap for audit in audits if audit.vector is not None]))
    median_implied = float(np.median(implied))
    return HypothesisReport(
        id=Hypothesis.H8,
        estimate=median,
        ci=_interval(draws, 1 - context.alpha, (median, median)),
        n=int(values.size),
        method='median_bootstrap',
        spec_tags=dict(context.spec_tags()),
        extra={
            'median_implied': median_implied,
            'implied_share_of_median_gap': (median_implied / median_gap) if median_gap else None,
        },
    )


# scale agreement

def scale_agreement(table, scale_a, scale_b, conf=0.95):
    """correlation of two scales over models tabulated on both"""
    pairs = [
        (record.score(scale_a), record.score(scale_b)) for record in table
        if record.score(scale_a) is not None and record.score(scale_b) is not None
    ]
    return stats.correlations(pairs, conf)


def gap_agreement(audits_a, audits_b, conf=0.95):
    """paper-level correlation of gaps computed on two scales"""
    gaps_b = {audit.doi: audit.gap for audit in audits_b if audit.gap is not None}
    pairs = [(audit.gap, gaps_b[audit.doi]) for audit in audits_a if audit.gap is not None and audit.doi in gaps_b]
    return stats.correlations(pairs, conf)


# specification curve

@dataclass(frozen=True)
class CurveCell:
    spec: dict
    estimate: float
    p: float
    reject: bool
    n: int
    error: str = None


@dataclass(frozen=True)
class SpecificationCurve:
    hypothesis: str
    axes: tuple
    cells: tuple
    point: float
    reject_fraction: float
    p10: float
    median: float
    p90: float
    verdict: bool = None

    def __len__(self):
        return len(self.cells)


def specification_curve(axes, evaluate, cap=4096, alpha=0.05, point=None, confirmatory=True, hypothesis=''):
    """evaluates every cell of the Cartesian product of axis levels

    axes is a sequence of (name, levels) with the primary level first;
    evaluate(spec) returns (estimate, p, n). The primary cell's estimate is the
    point estimate unless one is supplied.
    """
    axes = tuple((name, tuple(levels)) for name, levels in axes)
    for name, levels in axes:
        if not levels:
            raise ValueError('specification axis "{}" has no levels'.format(name))
    size = int(np.prod([len(levels) for _, levels in axes])) if axes else 1
    if size > cap:
        raise ProductTooLargeError('{} specifications exceed the cap of {}'.format(size, cap))

    cells = []
    for combo in product(*[levels for _, levels in axes]):
        spec = dict(zip([name for name, _ in axes], combo))
        try:
            estimate, p, n = evaluate(spec)
        except AuditError as ex:
            cells.append(CurveCell(spec, None, None, False, 0, str(ex)))
            continue
        cells.append(CurveCell(spec, estimate, p, p is not None and p <= alpha, n))

    estimates = [cell.estimate for cell in cells if cell.estimate is not None]
    if point is None:
        point = cells[0].estimate
    reject_fraction = sum(1 for cell in cells if cell.reject) / float(len(cells))
    p10 = median = p90 = None
    if estimates:
        p10, median, p90 = (float(value) for value in np.percentile(estimates, [10, 50, 90]))
    verdict = None
    if confirmatory:
        verdict = bool(
            point is not None and p10 is not None and reject_fraction >= DECISION_REJECT_FRACTION
            and point != 0 and np.sign(p10) == np.sign(point)
        )
    return SpecificationCurve(
        hypothesis=hypothesis, axes=axes, cells=tuple(cells), point=point, reject_fraction=reject_fraction,
        p10=p10, median=median, p90=p90, verdict=verdict,
    )


STANDARD_ERRORS = (stats.SE.CLUSTER, stats.SE.HC3)
THRESHOLD_LEVELS = (12.0, 8.0, 10.0, 15.0, 20.0)
ADMISSIBILITY_LEVELS = (Denominator.ADMISSIBILITY_EXPECTED, Denominator.TRIVALUED)
RAW_SHARE = 'raw'
SHARE_LEVELS = (RAW_SHARE,) + ShareMode.values()

CURVE_AXES = {
    Hypothesis.H1: (
        ('inclusion', InclusionArm.values()),
        ('model_age', ModelAge.values()),
        ('routing', RoutingTreatment.values()),
    ),
    Hypothesis.H3: (
        ('inclusion', InclusionArm.values()),
        ('model_age', ModelAge.values()),
        ('routing', RoutingTreatment.values()),
    ),
    Hypothesis.H6: (
        ('inclusion', InclusionArm.values()),
        ('valence_encoding', ValenceEncoding.values()),
        ('model_age', ModelAge.values()),
        ('standard_errors', STANDARD_ERRORS),
    ),
    Hypothesis.H2: (
        ('inclusion', InclusionArm.values()),
        ('model_age', ModelAge.values()),
        ('standard_errors', STANDARD_ERRORS),
    ),
    Hypothesis.H5: (
        ('inclusion', InclusionArm.values()),
        ('missing_config', MissingConfig.values()),
        ('tau', THRESHOLD_LEVELS),
        ('interpretive', InterpretiveMode.values()),
        ('admissibility', ADMISSIBILITY_LEVELS),
    ),
    Hypothesis.H4: (
        ('inclusion', InclusionArm.values()),
        ('missing_config', MissingConfig.values()),
        ('model_age', ModelAge.values()),
    ),
    Hypothesis.CLASS_SHARE: (
        ('inclusion', InclusionArm.values()),
        ('model_age', ModelAge.values()),
        ('framing_correction', SHARE_LEVELS),
    ),
}

CONFIRMATORY = (Hypothesis.H1, Hypothesis.H3, Hypothesis.H6)


def _sign_flip_p(values, context, rng):
    """one-sided p of the observed median against its sign-flip null"""
    result = permutation_null(np.median, values, draws=context.permutation_draws, rng=rng)
    exceed = sum(1 for value in result.null if value >= result.observed)
    return (1 + exceed) / float(len(result.null) + 1)


def _share_cell(audits, context, correction):
    k, n = class_share_counts(audits)
    if not n:
        raise EmptyDenominatorError('no framed papers in cell')
    if correction == RAW_SHARE:
        return k / float(n), None, n
    framings = [audit.framing for audit in audits if audit.framing is not None]
    return bayes_corrected_share(framings, context.framing_confusion, correction).share, None, n


def hypothesis_curve(records, context, hypothesis, axes=None, rng=None):
    """specification curve of one hypothesis over a corpus of records

    With an rng, H1 and H3 cells take their p from a sign-flip permutation null
    of the median with context.permutation_draws resamples; without one they use
    the exact or normal Wilcoxon p. H2 and H6 cells always use the Wald p. H4,
    H5 and the class-level share are descriptive and carry no p.
    """
    if hypothesis not in CURVE_AXES and axes is None:
        raise ValueError('no specification axes defined for {}'.format(hypothesis))
    axes = axes or CURVE_AXES[hypothesis]
    records = confident(records, context.confidence_floor)
    cache = {}

    def audits_for(spec):
        key = (
            spec.get('inclusion', InclusionArm.PRIMARY), spec.get('missing_config', context.missing),
            spec.get('tau', context.tau), spec.get('interpretive', context.interpretive_mode),
            spec.get('routing', context.routing),
        )
        if key not in cache:
            derived = context.derive(missing=key[1], tau=float(key[2]), interpretive_mode=key[3], routing=key[4])
            cache[key] = audit_corpus(select_inclusion(records, key[0]), derived, workers=1)
        return in_cohort(cache[key], spec.get('model_age', ModelAge.POOLED))

    def evaluate(spec):
        audits = audits_for(spec)
        if hypothesis in (Hypothesis.H1, Hypothesis.H3):
            values = [audit.gap if hypothesis == Hypothesis.H1 else audit.tier_gap for audit in audits]
            values = [value for value in values if value is not None]
            if not values:
                raise EmptyDenominatorError('empty cell')
            if rng is not None:
                return float(np.median(values)), _sign_flip_p(values, context, rng), len(values)
            test = stats.wilcoxon_signed_rank(values, 0.0, stats.Side.GREATER)
            return float(np.median(values)), test.p_value, len(values)
        if hypothesis == Hypothesis.H6:
            estimate, std_error, n = valence_contrast(
                audits, None, spec.get('valence_encoding', ValenceEncoding.CATEGORICAL),
                ValenceEstimator.CLUSTER_OLS, spec.get('standard_errors', stats.SE.CLUSTER),
            )
            return estimate, _two_sided(estimate, std_error), n
        if hypothesis == Hypothesis.H2:
            slopes = _pooled(_slope_rows(audits), spec.get('standard_errors', stats.SE.HC3))
            return slopes.pooled, _two_sided(slopes.pooled, slopes.pooled_se), len(audits)
        if hypothesis == Hypothesis.H5:
            result = h5_rate(audits, spec.get('admissibility', Denominator.ADMISSIBILITY_EXPECTED))
            return result.rate, None, result.n
        if hypothesis == Hypothesis.H4:
            k, n = h4_counts(audits, spec.get('missing_config', context.missing))
            if not n:
                raise EmptyDenominatorError('no reasoning-capable evaluations in cell')
            return k / float(n), None, n
        if hypothesis == Hypothesis.CLASS_SHARE:
            return _share_cell(audits, context, spec.get('framing_correction', RAW_SHARE))
        raise ValueError('no evaluator for {}'.format(hypothesis))

    return specification_curve(
        axes, evaluate, cap=context.spec_curve_cap, alpha=context.alpha, confirmatory=hypothesis in CONFIRMATORY,
        hypothesis=hypothesis,
    )


# reruns

def h10_deployment_rerun(records, context, rng=None):
    """confirmatory and descriptive families recomputed against the deployment frontier"""
    if not context.table.has_priced_base():
        raise NoPricedBaseError('the capability table has no priced base-tier model')
    deployment = context.derive(variant=Variant.DEPLOYMENT)
    audits = audit_corpus(records, deployment)
    rng = rng or deployment.rng()
    return {
        'confirmatory': run_confirmatory_family(audits, deployment, rng),
        'descriptive': run_descriptive_family(audits, deployment),
    }


def drop_imputed_rerun(records, context, rng=None):
    """confirmatory family re-audited under strict lookup

    Primary models, gaps and tier dyads are all recomputed without sibling
    imputation, then papers without a tabulated primary score are dropped.
    """
    strict = context.derive(policy=LookupPolicy.STRICT)
    audits = audit_corpus(records, strict)
    kept = direct_scores_only(audits)
    logger.info('drop-imputed arm keeps %d of %d papers', len(kept), len(audits))
    family = run_confirmatory_family(kept, strict, rng)
    return [replace(report, spec_tags=dict(report.spec_tags, score_arm='drop_imputed')) for report in family]
