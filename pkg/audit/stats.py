"""
Statistical primitives behind the hypothesis battery.

Distributions, ranks and contingency tests come from scipy; least squares,
IRLS and the exact rank-sum enumerations are written against numpy.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy import stats as sps

from audit.exceptions import (
    AllZerosError, DegenerateAgreementError, DegenerateTableError, RankDeficientError, SeparationError,
    TooFewClustersError, ZeroVarianceError,
)

logger = logging.getLogger(__name__)

WILCOXON_EXACT_MAX = 25
MANN_WHITNEY_EXACT_MAX = 8
LOGIT_TOLERANCE = 1e-10
LOGIT_MAX_ITER = 100


class Side(object):
    GREATER = 'greater'
    LESS = 'less'
    TWO_SIDED = 'two_sided'

    @classmethod
    def values(cls):
        return cls.GREATER, cls.LESS, cls.TWO_SIDED


class SE(object):
    """covariance estimators for ols"""
    CLASSICAL = 'classical'
    HC1 = 'HC1'
    HC3 = 'HC3'
    CLUSTER = 'cluster'

    @classmethod
    def values(cls):
        return cls.CLASSICAL, cls.HC1, cls.HC3, cls.CLUSTER


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    side: str
    n: int
    method: str
    df: float = None


def _clip(p):
    return float(min(1.0, max(0.0, p)))


def _check_side(side):
    if side not in Side.values():
        raise ValueError('unknown side "{}"'.format(side))


def _sided(p_greater, p_less, side):
    if side == Side.GREATER:
        return _clip(p_greater)
    if side == Side.LESS:
        return _clip(p_less)
    return _clip(2.0 * min(p_greater, p_less))


# rank tests

def _signed_rank_distribution(doubled_ranks):
    """counts of every achievable doubled positive-rank sum"""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for rank in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[:total + 1 - rank]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(xs, null_location=0.0, side=Side.GREATER):
    """one-sample signed-rank test of location against null_location

    Zero differences are discarded and ties get average ranks. Up to
    WILCOXON_EXACT_MAX non-zero differences the null is enumerated exactly;
    beyond that a tie- and continuity-corrected normal approximation is used.
    """
    _check_side(side)
    diffs = np.asarray(xs, dtype=float) - null_location
    if diffs.size == 0:
        raise ValueError('signed-rank test needs at least one observation')
    diffs = diffs[diffs != 0]
    if diffs.size == 0:
        raise AllZerosError('every difference is zero after zero-discard')
    n = int(diffs.size)
    ranks = sps.rankdata(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())

    if n <= WILCOXON_EXACT_MAX:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_distribution(doubled)
        probs = counts / float(2 ** n)
        observed = int(round(2 * w_plus))
        p_greater = probs[observed:].sum()
        p_less = probs[:observed + 1].sum()
        return TestResult(w_plus, _sided(p_greater, p_less, side), side, n, 'exact(zero_discard)')

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(diffs), return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - ((tie_counts ** 3 - tie_counts).sum()) / 48.0
    sd = math.sqrt(variance)
    p_greater = sps.norm.sf((w_plus - mean - 0.5) / sd)
    p_less = sps.norm.cdf((w_plus - mean + 0.5) / sd)
    return TestResult(w_plus, _sided(p_greater, p_less, side), side, n, 'approx(zero_discard,tie,continuity)')


def mann_whitney_u(xs, ys, side=Side.TWO_SIDED):
    """rank-sum test; side greater means xs tends to exceed ys"""
    _check_side(side)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError('Mann-Whitney needs two non-empty samples')
    n1, n2 = int(x.size), int(y.size)
    ranks = sps.rankdata(np.concatenate([x, y]))
    offset = n1 * (n1 + 1) / 2.0
    u = float(ranks[:n1].sum() - offset)

    if n1 <= MANN_WHITNEY_EXACT_MAX and n2 <= MANN_WHITNEY_EXACT_MAX:
        splits = np.array([
            ranks[list(chosen)].sum() - offset
            for chosen in itertools.combinations(range(n1 + n2), n1)
        ])
        p_greater = np.mean(splits >= u - 1e-9)
        p_less = np.mean(splits <= u + 1e-9)
        return TestResult(u, _sided(p_greater, p_less, side), side, n1 + n2, 'exact')

    total = n1 + n2
    mean = n1 * n2 / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n1 * n2 / 12.0 * ((total + 1) - (tie_counts ** 3 - tie_counts).sum() / (total * (total - 1.0)))
    if variance <= 0:
        return TestResult(u, 1.0, side, total, 'approx(tie,continuity)')
    sd = math.sqrt(variance)
    p_greater = sps.norm.sf((u - mean - 0.5) / sd)
    p_less = sps.norm.cdf((u - mean + 0.5) / sd)
    return TestResult(u, _sided(p_greater, p_less, side), side, total, 'approx(tie,continuity)')


# proportions

def wilson_ci(k, n, conf=0.95):
    """Wilson score interval for k successes in n trials"""
    if n <= 0 or not 0 <= k <= n:
        raise ValueError('Wilson interval needs 0 <= k <= n and n > 0')
    z = sps.norm.ppf(1 - (1 - conf) / 2.0)
    p = k / float(n)
    denom = 1 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / denom
    low = 0.0 if k == 0 else max(0.0, center - half)
    high = 1.0 if k == n else min(1.0, center + half)
    return low, high


def two_proportion_z(k1, n1, k2, n2, side=Side.TWO_SIDED):
    """pooled-variance z test of p1 - p2"""
    _check_side(side)
    if n1 <= 0 or n2 <= 0:
        raise DegenerateTableError('two-proportion z needs positive denominators')
    p1, p2 = k1 / float(n1), k2 / float(n2)
    pooled = (k1 + k2) / float(n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1.0 / n1 + 1.0 / n2))
    if se == 0:
        raise DegenerateTableError('pooled proportion is {}; the z statistic is undefined'.format(pooled))
    z = (p1 - p2) / se
    return TestResult(z, _sided(sps.norm.sf(z), sps.norm.cdf(z), side), side, n1 + n2, 'pooled')


def chi_square(table):
    """Pearson chi-square test of independence on an r x c count table"""
    counts = np.asarray(table, dtype=float)
    if counts.ndim != 2 or min(counts.shape) < 2:
        raise DegenerateTableError('chi-square needs at least a 2 x 2 table')
    if (counts.sum(axis=0) == 0).any() or (counts.sum(axis=1) == 0).any():
        raise DegenerateTableError('a row or column of the table is empty')
    statistic, p_value, dof, _ = sps.chi2_contingency(counts, correction=False)
    return TestResult(float(statistic), _clip(p_value), Side.TWO_SIDED, int(counts.sum()), 'pearson', float(dof))


# multiplicity

def holm_stepdown(ps, alpha=0.05):
    """Holm-adjusted p-values and rejection flags, in input order"""
    ps = np.asarray(ps, dtype=float)
    m = ps.size
    order = np.argsort(ps, kind='stable')
    adjusted = np.empty(m)
    running = 0.0
    for position, index in enumerate(order):
        running = max(running, min(1.0, (m - position) * ps[index]))
        adjusted[index] = running
    return adjusted.tolist(), [bool(p <= alpha) for p in adjusted]


def bonferroni_threshold(alpha=0.05, k=1):
    return alpha / float(k)


def bonferroni(ps, k=None, alpha=0.05):
    """rejection flags at the per-test threshold alpha / k"""
    k = k or len(ps)
    threshold = bonferroni_threshold(alpha, k)
    return [bool(p <= threshold) for p in ps]


@dataclass(frozen=True)
class SimultaneousCI:
    estimate: float
    low: float
    high: float
    level: float
    method: str


def simultaneous_cis(members, alpha=0.05, m=None, ps=None):
    """Wilson intervals widened for a family of m proportions

    Without ps every member gets level 1 - alpha/m. With ps the levels are
    allocated in Holm order: the smallest p gets alpha/m, the next
    alpha/(m - 1), and so on.
    """
    m = m or len(members)
    if m < 1:
        raise ValueError('a simultaneous family needs at least one member')
    levels = [1 - alpha / float(m)] * len(members)
    method = 'wilson_bonferroni(m={})'.format(m)
    if ps is not None:
        order = np.argsort(np.asarray(ps, dtype=float), kind='stable')
        for position, index in enumerate(order):
            levels[index] = 1 - alpha / float(m - position)
        method = 'wilson_holm_stepdown(m={})'.format(m)
    intervals = []
    for (k, n), level in zip(members, levels):
        low, high = wilson_ci(k, n, level)
        intervals.append(SimultaneousCI(k / float(n), low, high, level, method))
    return intervals


# regression

@dataclass(frozen=True)
class OlsFit:
    names: tuple
    coef: np.ndarray
    cov: np.ndarray
    residuals: np.ndarray
    n: int
    se_kind: str

    @property
    def se(self):
        return np.sqrt(np.clip(np.diag(self.cov), 0, None))

    def index(self, name):
        return self.names.index(name)

    def coefficient(self, name):
        return float(self.coef[self.index(name)])

    def std_error(self, name):
        return float(self.se[self.index(name)])


def _group_codes(groups):
    _, codes = np.unique(np.asarray(groups, dtype=object).astype(str), return_inverse=True)
    return codes


def ols(y, X, names=None, se=SE.CLASSICAL, clusters=None):
    """least-squares fit with classical, HC1, HC3 or cluster (CR1) covariance"""
    if se not in SE.values():
        raise ValueError('unknown standard-error estimator "{}"'.format(se))
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    names = tuple(names or ('x{}'.format(i) for i in range(p)))
    if n < p or np.linalg.matrix_rank(X) < p:
        raise RankDeficientError('design matrix of shape {} is not of full column rank'.format(X.shape))
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ beta
    bread = np.linalg.inv(X.T @ X)
    dof = max(n - p, 1)

    if se == SE.CLASSICAL:
        cov = bread * (residuals @ residuals) / dof
    elif se == SE.HC1:
        meat = X.T @ (X * (residuals ** 2)[:, None])
        cov = bread @ meat @ bread * n / float(dof)
    elif se == SE.HC3:
        leverage = np.sum((X @ bread) * X, axis=1)
        scale = np.where(1 - leverage > 1e-12, 1 - leverage, np.inf)
        meat = X.T @ (X * ((residuals / scale) ** 2)[:, None])
        cov = bread @ meat @ bread
    else:
        if clusters is None:
            raise ValueError('cluster standard errors need cluster labels')
        codes = _group_codes(clusters)
        groups = int(codes.max()) + 1
        if groups < 2:
            raise TooFewClustersError('cluster covariance needs at least two clusters')
        scores = np.zeros((groups, p))
        np.add.at(scores, codes, X * residuals[:, None])
        meat = scores.T @ scores
        adjust = groups / (groups - 1.0) * (n - 1.0) / dof
        cov = bread @ meat @ bread * adjust
    return OlsFit(names=names, coef=beta, cov=cov, residuals=residuals, n=n, se_kind=se)


def wald_test(fit, name, null=0.0):
    """two-sided normal Wald test of one coefficient"""
    estimate = fit.coefficient(name)
    se = fit.std_error(name)
    if se == 0:
        p_value = 0.0 if estimate != null else 1.0
        return TestResult(math.inf if estimate != null else 0.0, p_value, Side.TWO_SIDED, fit.n, 'wald')
    z = (estimate - null) / se
    return TestResult(z, _clip(2 * sps.norm.sf(abs(z))), Side.TWO_SIDED, fit.n, 'wald({})'.format(fit.se_kind))


def domain_year_design(years, domains, extra=None):
    """intercept + year + domain + domain:year with drop-first domain coding

    Year is centered so the intercept stays well conditioned; slopes are
    unaffected. extra maps column name -> values appended after the expansion.
    """
    years = np.asarray(years, dtype=float)
    centered = years - years.mean()
    levels = sorted(set(domains))
    columns = [np.ones_like(centered), centered]
    names = ['const', 'year']
    dummies = {}
    for level in levels[1:]:
        dummy = np.array([1.0 if domain == level else 0.0 for domain in domains])
        dummies[level] = dummy
        columns.append(dummy)
        names.append('domain[{}]'.format(level))
    for level in levels[1:]:
        columns.append(dummies[level] * centered)
        names.append('domain[{}]:year'.format(level))
    for name, values in (extra or {}).items():
        columns.append(np.asarray(values, dtype=float))
        names.append(name)
    return np.column_stack(columns), tuple(names), levels


@dataclass(frozen=True)
class DomainSlopes:
    """per-domain year slopes and their n-weighted pool"""
    per_domain: dict
    counts: dict
    pooled: float
    pooled_se: float
    fit: OlsFit


def pooled_domain_slope(y, years, domains, se=SE.HC3, clusters=None, extra=None):
    """n-weighted mean of per-domain slopes from the domain x year interaction fit"""
    X, names, levels = domain_year_design(years, domains, extra)
    fit = ols(y, X, names, se=se, clusters=clusters)
    total = float(len(domains))
    counts = {level: sum(1 for domain in domains if domain == level) for level in levels}
    gradient = np.zeros(len(names))
    gradient[names.index('year')] = 1.0
    per_domain = {}
    for level in levels:
        slope = fit.coefficient('year')
        if level != levels[0]:
            interaction = names.index('domain[{}]:year'.format(level))
            slope += float(fit.coef[interaction])
            gradient[interaction] = counts[level] / total
        per_domain[level] = slope
    pooled = sum(per_domain[level] * counts[level] for level in levels) / total
    pooled_se = float(math.sqrt(max(gradient @ fit.cov @ gradient, 0.0)))
    return DomainSlopes(per_domain=per_domain, counts=counts, pooled=pooled, pooled_se=pooled_se, fit=fit)


@dataclass(frozen=True)
class LogitFit:
    names: tuple
    coef: np.ndarray
    cov: np.ndarray
    n: int
    iterations: int
    conf: float

    def coefficient(self, name):
        return float(self.coef[self.names.index(name)])

    def std_error(self, name):
        return float(math.sqrt(self.cov[self.names.index(name), self.names.index(name)]))

    def odds_ratio(self, name='year'):
        """exp(coefficient) with a Wald interval on the log-odds scale"""
        beta, se = self.coefficient(name), self.std_error(name)
        z = sps.norm.ppf(1 - (1 - self.conf) / 2.0)
        return math.exp(beta), (math.exp(beta - z * se), math.exp(beta + z * se))

    def gradient(self, X, y):
        mu = special.expit(X @ self.coef)
        return X.T @ (y - mu)


def logit(y, years, covariate=None, conf=0.95, tol=LOGIT_TOLERANCE, max_iter=LOGIT_MAX_ITER):
    """logistic regression of a binary outcome on year (plus a covariate) by IRLS"""
    y = np.asarray(y, dtype=float)
    if y.size == 0 or y.min() == y.max():
        raise SeparationError('logit needs both outcome classes')
    years = np.asarray(years, dtype=float)
    columns, names = [np.ones_like(years), years - years.mean()], ['const', 'year']
    if covariate is not None:
        covariate = np.asarray(covariate, dtype=float)
        columns.append(covariate - covariate.mean())
        names.append('covariate')
    X = np.column_stack(columns)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficientError('logit design is not of full column rank')

    beta = np.zeros(X.shape[1])
    converged = False
    for iteration in range(1, max_iter + 1):
        eta = X @ beta
        mu = special.expit(eta)
        weights = mu * (1 - mu)
        if weights.max() < 1e-12:
            raise SeparationError('fitted probabilities collapsed to 0/1')
        information = X.T @ (X * weights[:, None])
        try:
            step = np.linalg.solve(information, X.T @ (y - mu))
        except np.linalg.LinAlgError:
            raise SeparationError('information matrix is singular')
        beta = beta + step
        if np.abs(step).max() < tol:
            converged = True
            break
    if not converged and np.abs(beta).max() > 15:
        raise SeparationError('coefficients diverge; the outcome is separated')
    mu = special.expit(X @ beta)
    information = X.T @ (X * (mu * (1 - mu))[:, None])
    return LogitFit(
        names=tuple(names), coef=beta, cov=np.linalg.inv(information), n=int(y.size), iterations=iteration, conf=conf,
    )


# association

@dataclass(frozen=True)
class Correlation:
    pearson: float
    pearson_ci: tuple
    spearman: float
    n: int


def _pearson(a, b):
    if a.std() == 0 or b.std() == 0:
        raise ZeroVarianceError('correlation input has zero variance')
    return float(np.corrcoef(a, b)[0, 1])


def fisher_ci(r, n, conf=0.95):
    """Fisher-z interval for a Pearson correlation"""
    if abs(r) >= 1:
        return r, r
    z = sps.norm.ppf(1 - (1 - conf) / 2.0)
    center = math.atanh(r)
    half = z / math.sqrt(n - 3)
    return math.tanh(center - half), math.tanh(center + half)


def correlations(pairs, conf=0.95):
    """Pearson with Fisher-z CI and Spearman with average ranks"""
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError('correlations need at least three pairs')
    a, b = data[:, 0], data[:, 1]
    r = _pearson(a, b)
    rho = _pearson(sps.rankdata(a), sps.rankdata(b))
    n = int(data.shape[0])
    return Correlation(pearson=r, pearson_ci=fisher_ci(r, n, conf) if n > 3 else (-1.0, 1.0), spearman=rho, n=n)


def cohen_kappa(labels_a, labels_b):
    """chance-corrected agreement between two coders"""
    a, b = list(labels_a), list(labels_b)
    if len(a) != len(b):
        raise ValueError('kappa needs label sequences of equal length')
    if len(a) < 2:
        raise ValueError('kappa needs at least two items')
    n = float(len(a))
    observed = sum(1 for left, right in zip(a, b) if left == right) / n
    classes = set(a) | set(b)
    expected = sum((a.count(label) / n) * (b.count(label) / n) for label in classes)
    if expected >= 1:
        raise DegenerateAgreementError('chance agreement is total')
    return (observed - expected) / (1 - expected)


@dataclass(frozen=True)
class ConfusionMatrix:
    """gold x observed label counts from a dual-coded validation set"""
    labels: tuple
    counts: np.ndarray
    source_n: int = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (len(self.labels), len(self.labels)):
            raise ValueError('confusion counts must be a square matrix over the labels')
        if (counts < 0).any():
            raise ValueError('confusion counts must be non-negative')
        object.__setattr__(self, 'counts', counts)

    @classmethod
    def identity(cls, labels, n=100):
        return cls(tuple(labels), np.eye(len(labels)) * n)

    def index(self, label):
        return self.labels.index(label)

    def gold_given_observed(self):
        """column-normalized counts: P(gold | observed)"""
        columns = self.counts.sum(axis=0)
        with np.errstate(invalid='ignore', divide='ignore'):
            return np.where(columns > 0, self.counts / columns, 0.0)

    def kappa(self):
        return kappa_from_confusion(self.counts)


def load_confusion(path):
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    return ConfusionMatrix(tuple(data['labels']), np.asarray(data['counts'], dtype=float), data.get('source_n'))


def kappa_from_confusion(matrix):
    """kappa from a square agreement table"""
    counts = np.asarray(matrix, dtype=float)
    total = counts.sum()
    observed = np.trace(counts) / total
    expected = float((counts.sum(axis=0) * counts.sum(axis=1)).sum() / (total * total))
    if expected >= 1:
        raise DegenerateAgreementError('chance agreement is total')
    return (observed - expected) / (1 - expected)


# distribution summaries

def nearest_rank(values, percentile):
    """nearest-rank percentile of values"""
    ordered = sorted(values)
    if not ordered:
        raise ValueError('nearest-rank percentile of an empty sample')
    rank = max(1, int(math.ceil(percentile / 100.0 * len(ordered))))
    return ordered[min(rank, len(ordered)) - 1]


def percentile_of(values, value):
    """percentage of values at or below value"""
    ordered = np.asarray(values, dtype=float)
    if ordered.size == 0:
        raise ValueError('percentile of an empty sample')
    return 100.0 * float(np.mean(ordered <= value))


def median_iqr(values):
    data = np.asarray(values, dtype=float)
    return float(np.median(data)), (float(np.percentile(data, 25)), float(np.percentile(data, 75)))


def percentile_interval(draws, conf=0.95):
    """percentile-method bootstrap interval"""
    data = np.asarray(draws, dtype=float)
    if data.size == 0:
        raise ValueError('no bootstrap draws to summarize')
    tail = (1 - conf) / 2.0 * 100
    return float(np.percentile(data, tail)), float(np.percentile(data, 100 - tail))
