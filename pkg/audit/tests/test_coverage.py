from datetime import date

from audit.coverage import Family, capture_rate, coverage_battery, gap_proxy_months, model_token
from audit.tests.helpers import FixtureTestCase


class CoverageTestCase(FixtureTestCase):
    """tests the coverage representativeness battery"""

    def _residual(self):
        return [
            self._record(doi='10.1000/r{}'.format(index), model='Acme 2', conclusion_valence='negative',
                         conclusion_framing='ai_generic')
            for index in range(4)
        ]

    def test_capture_rate(self):
        """tests extrapolating the residual inclusion rate to its population"""
        estimate = capture_rate(336, 9379, 132463, 4745)
        self.assertAlmostEqual(estimate.additional, 4745, delta=1)
        self.assertAlmostEqual(estimate.capture, 0.5, delta=0.001)

        # verify the capture interval runs opposite to the rate interval
        self.assertLess(estimate.additional_ci[0], estimate.additional)
        self.assertGreater(estimate.additional_ci[1], estimate.additional)
        self.assertLess(estimate.capture_ci[0], estimate.capture)
        self.assertGreater(estimate.capture_ci[1], estimate.capture)

    def test_battery(self):
        """tests the family of cell tests and its Bonferroni threshold"""
        report = coverage_battery(
            self._corpus_records(), self._residual(), (817, 8868), (336, 9379), self.table, self.aliases,
            residual_population=132463,
        )
        self.assertEqual(report.k, len(report.tests))
        self.assertAlmostEqual(report.per_test_alpha, 0.05 / report.k)

        # verify the inclusion-rate gap survives
        inclusion = report.tests[0]
        self.assertEqual((inclusion.family, inclusion.cell), (Family.INCLUSION, 'included'))
        self.assertTrue(inclusion.survives)
        self.assertAlmostEqual(inclusion.shift_pp, 100 * (336 / 9379.0 - 817 / 8868.0))

        # verify every family with data is present and empty cells are skipped
        families = {test.family for test in report.tests}
        self.assertEqual(families, {
            Family.INCLUSION, Family.VALENCE, Family.FRAMING, Family.MODEL_TOKEN, Family.GAP_PROXY,
        })
        valence_cells = sorted(test.cell for test in report.tests if test.family == Family.VALENCE)
        self.assertEqual(valence_cells, ['negative', 'positive'])
        self.assertEqual(report.gap_proxy['residual']['n'], 4)
        self.assertEqual(report.capture.residual_population, 132463)

    def test_declared_family_size(self):
        """tests a declared family size overrides the tests run"""
        report = coverage_battery(self._corpus_records(), self._residual(), (817, 8868), (336, 9379), k=21)
        self.assertEqual(report.k, 21)
        self.assertAlmostEqual(report.per_test_alpha, 0.05 / 21)
        self.assertNotIn(Family.GAP_PROXY, {test.family for test in report.tests})

    def test_gap_proxy(self):
        """tests months from model release to the middle of the publication year"""
        record = self._record(publication_date=date(2024, 9, 1), model='acme-1')
        months = gap_proxy_months(record, self.table, self.aliases)
        self.assertAlmostEqual(months, (date(2024, 7, 1) - date(2023, 1, 15)).days / (365.25 / 12))
        self.assertIsNone(gap_proxy_months(self._record(model='acme-3'), self.table, self.aliases))
        self.assertEqual(model_token(self._record(model='OpenAI/Acme 2')), 'acme-2')
        self.assertEqual(model_token(self._record(model='')), 'unspecified')
