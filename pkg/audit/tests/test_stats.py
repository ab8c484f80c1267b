import numpy as np
from django.test import SimpleTestCase

from audit import stats
from audit.exceptions import (
    AllZerosError, DegenerateTableError, RankDeficientError, SeparationError, ZeroVarianceError,
)


class ProportionTestCase(SimpleTestCase):
    """tests proportion intervals and contingency tests"""

    def test_wilson(self):
        """tests Wilson intervals against hand-computed values"""
        low, high = stats.wilson_ci(336, 9379)
        self.assertAlmostEqual(low, 0.03225, delta=1e-4)
        self.assertAlmostEqual(high, 0.03978, delta=1e-4)

        low, high = stats.wilson_ci(817, 8868)
        self.assertAlmostEqual(low, 0.086, delta=0.001)
        self.assertAlmostEqual(high, 0.098, delta=0.001)

        # verify the bounds pin at 0 and 1
        self.assertEqual(stats.wilson_ci(0, 10)[0], 0.0)
        self.assertEqual(stats.wilson_ci(10, 10)[1], 1.0)
        with self.assertRaises(ValueError):
            stats.wilson_ci(3, 0)

    def test_chi_square_matches_z(self):
        """tests the 2 x 2 chi-square statistic is the squared two-proportion z"""
        z = stats.two_proportion_z(17, 539, 111, 524)
        chi = stats.chi_square([[17, 522], [111, 413]])
        self.assertAlmostEqual(chi.statistic, z.statistic ** 2, places=6)
        self.assertAlmostEqual(chi.p_value, z.p_value, places=9)
        self.assertEqual(chi.df, 1.0)

        # verify degenerate inputs
        with self.assertRaises(DegenerateTableError):
            stats.two_proportion_z(0, 10, 0, 10)
        with self.assertRaises(DegenerateTableError):
            stats.chi_square([[0, 0], [3, 4]])


class RankTestCase(SimpleTestCase):
    """tests the exact and approximate rank tests"""

    def test_wilcoxon_exact(self):
        """tests the exact signed-rank null"""
        result = stats.wilcoxon_signed_rank([1.0, 2.0, 3.0])
        self.assertEqual(result.statistic, 6.0)
        self.assertAlmostEqual(result.p_value, 0.125)
        self.assertEqual(result.method, 'exact(zero_discard)')

        # verify zeros are discarded before ranking
        self.assertEqual(stats.wilcoxon_signed_rank([0.0, 1.0, 2.0, 3.0]).n, 3)
        with self.assertRaises(AllZerosError):
            stats.wilcoxon_signed_rank([0.0, 0.0])

    def test_wilcoxon_approximate(self):
        """tests large samples use the normal approximation"""
        result = stats.wilcoxon_signed_rank([float(value) for value in range(1, 31)])
        self.assertTrue(result.method.startswith('approx'))
        self.assertLess(result.p_value, 0.001)

    def test_mann_whitney(self):
        """tests the exact rank-sum null on small samples"""
        result = stats.mann_whitney_u([4, 5, 6], [1, 2, 3], side=stats.Side.GREATER)
        self.assertEqual(result.statistic, 9.0)
        self.assertAlmostEqual(result.p_value, 0.05)

        # verify the two-sided p doubles the smaller tail
        self.assertAlmostEqual(stats.mann_whitney_u([4, 5, 6], [1, 2, 3]).p_value, 0.1)
        with self.assertRaises(ValueError):
            stats.mann_whitney_u([], [1])


class MultiplicityTestCase(SimpleTestCase):
    """tests family-wise corrections"""

    def test_holm(self):
        """tests Holm adjusts in sorted order and reports in input order"""
        adjusted, flags = stats.holm_stepdown([0.04, 0.01, 0.03])
        self.assertEqual(flags, [False, True, False])
        for value, expected in zip(adjusted, [0.06, 0.03, 0.06]):
            self.assertAlmostEqual(value, expected)

    def test_bonferroni(self):
        """tests the per-test threshold"""
        self.assertAlmostEqual(stats.bonferroni_threshold(0.05, 21), 0.05 / 21)
        self.assertEqual(stats.bonferroni([0.001, 0.01], k=21), [True, False])

    def test_simultaneous_cis(self):
        """tests simultaneous levels with and without Holm allocation"""
        members = [(30, 100), (50, 100), (70, 100)]
        plain = stats.simultaneous_cis(members, m=3)
        self.assertTrue(all(abs(ci.level - (1 - 0.05 / 3)) < 1e-12 for ci in plain))
        self.assertEqual(plain[0].method, 'wilson_bonferroni(m=3)')

        # verify the smallest p gets the strictest level
        holm = stats.simultaneous_cis(members, m=3, ps=[0.01, 0.2, 0.03])
        self.assertAlmostEqual(holm[0].level, 1 - 0.05 / 3)
        self.assertAlmostEqual(holm[2].level, 1 - 0.05 / 2)
        self.assertAlmostEqual(holm[1].level, 0.95)
        self.assertLess(holm[1].high - holm[1].low, plain[1].high - plain[1].low)


class RegressionTestCase(SimpleTestCase):
    """tests least squares and logistic fits"""

    def test_pooled_domain_slope(self):
        """tests per-domain slopes pool weighted by domain size"""
        years = [2020, 2021, 2022, 2020, 2021, 2022, 2023]
        domains = ['a', 'a', 'a', 'b', 'b', 'b', 'b']
        y = [
            2.0 * (year - 2020) + 1 if domain == 'a' else 4.0 * (year - 2020)
            for year, domain in zip(years, domains)
        ]
        slopes = stats.pooled_domain_slope(y, years, domains)

        # verify the exact slopes and their weighted pool
        self.assertAlmostEqual(slopes.per_domain['a'], 2.0)
        self.assertAlmostEqual(slopes.per_domain['b'], 4.0)
        self.assertEqual(slopes.counts, {'a': 3, 'b': 4})
        self.assertAlmostEqual(slopes.pooled, (2.0 * 3 + 4.0 * 4) / 7.0)

    def test_ols_errors(self):
        """tests rank-deficient designs and unknown estimators"""
        with self.assertRaises(RankDeficientError):
            stats.ols([1, 2, 3], [[1, 1], [1, 1], [1, 1]])
        with self.assertRaises(ValueError):
            stats.ols([1, 2, 3], [[1, 0], [1, 1], [1, 2]], se='robust')
        with self.assertRaises(ValueError):
            stats.ols([1, 2, 3], [[1, 0], [1, 1], [1, 2]], se=stats.SE.CLUSTER)

    def test_ols_cluster(self):
        """tests cluster-robust errors on a noisy line"""
        X = [[1, value] for value in range(8)]
        y = [0.1, 1.2, 1.9, 3.2, 3.9, 5.1, 6.0, 6.8]
        fit = stats.ols(y, X, ('const', 'year'), se=stats.SE.CLUSTER, clusters=list('aabbccdd'))
        self.assertAlmostEqual(fit.coefficient('year'), 0.9667, places=3)
        self.assertGreater(fit.std_error('year'), 0)
        self.assertLess(stats.wald_test(fit, 'year').p_value, 0.01)

    def test_logit(self):
        """tests the logistic fit recovers a positive year trend"""
        years = [2020] * 4 + [2021] * 4 + [2022] * 4 + [2023] * 4
        y = [0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 0]
        fit = stats.logit(y, years)
        ratio, (low, high) = fit.odds_ratio()
        self.assertGreater(ratio, 1)
        self.assertLess(low, ratio)
        self.assertGreater(high, ratio)

        # verify the score equations hold at the optimum
        centered = np.asarray(years, dtype=float) - np.mean(years)
        X = np.column_stack([np.ones_like(centered), centered])
        self.assertLess(np.abs(fit.gradient(X, np.asarray(y, dtype=float))).max(), 1e-6)

        # verify a single outcome class is refused
        with self.assertRaises(SeparationError):
            stats.logit([1, 1, 1], [2020, 2021, 2022])


class AgreementTestCase(SimpleTestCase):
    """tests correlation and chance-corrected agreement"""

    def test_fisher_ci(self):
        """tests the Fisher-z interval"""
        low, high = stats.fisher_ci(0.9345, 53)
        self.assertAlmostEqual(low, 0.889, delta=0.001)
        self.assertAlmostEqual(high, 0.962, delta=0.001)

    def test_correlations(self):
        """tests Pearson and Spearman on a monotone curve"""
        result = stats.correlations([(1, 1), (2, 4), (3, 9), (4, 16), (5, 25)])
        self.assertAlmostEqual(result.spearman, 1.0)
        self.assertLess(result.pearson, 1.0)
        self.assertEqual(result.n, 5)
        with self.assertRaises(ZeroVarianceError):
            stats.correlations([(1, 2), (1, 3), (1, 4)])

    def test_kappa(self):
        """tests kappa from labels and from a confusion table"""
        self.assertAlmostEqual(stats.kappa_from_confusion([[44, 6], [6, 44]]), 0.76)
        self.assertAlmostEqual(stats.cohen_kappa('xxyy', 'xyyy'), 0.5)

        # verify a confusion matrix normalizes by observed label
        matrix = stats.ConfusionMatrix(('a', 'b'), [[8, 1], [2, 9]])
        posterior = matrix.gold_given_observed()
        self.assertAlmostEqual(posterior[0][0], 0.8)
        self.assertAlmostEqual(posterior[1][1], 0.9)
        with self.assertRaises(ValueError):
            stats.ConfusionMatrix(('a', 'b'), [[1, 2, 3]])


class SummaryTestCase(SimpleTestCase):
    """tests distribution summaries"""

    def test_median_iqr(self):
        """tests the median and interquartile range"""
        median, (q1, q3) = stats.median_iqr([0, 1.31, 10.85, 18.28, 30])
        self.assertAlmostEqual(median, 10.85)
        self.assertAlmostEqual(q1, 1.31)
        self.assertAlmostEqual(q3, 18.28)

    def test_ranks(self):
        """tests nearest-rank percentiles and percentile placement"""
        values = list(range(1, 11))
        self.assertEqual(stats.nearest_rank(values, 90), 9)
        self.assertEqual(stats.nearest_rank(values, 0), 1)
        self.assertEqual(stats.percentile_of(values, 3.5), 30.0)
        with self.assertRaises(ValueError):
            stats.nearest_rank([], 50)
