import io
from datetime import date

from audit.checklist import (
    ITEMS, ChecklistAssessment, LadderRow, assess_record, completeness, core3, disclosure_ladder, exemplar_floor,
    frame_coherence, load_assessment, summarize, write_ladder_csv,
)
from audit.exceptions import ChecklistFileError, MissingFieldsError
from audit.records import DeclaredFrame, Disclosure
from audit.tests.helpers import FixtureTestCase, disclosed


class ChecklistTestCase(FixtureTestCase):
    """tests the configuration-reporting checklist rules"""

    def _assessment(self, disclosed_items=(), na=(), **kwargs):
        items = {item: Disclosure.UNDISCLOSED for item in ITEMS}
        items.update({item: Disclosure.DISCLOSED for item in disclosed_items})
        items.update({item: Disclosure.NOT_APPLICABLE for item in na})
        kwargs.setdefault('declared_frame', DeclaredFrame.FRONTIER)
        kwargs.setdefault('tested_tier_is_frontier', True)
        return ChecklistAssessment(items, **kwargs)

    def test_core3(self):
        """tests the desk-reject tier"""
        self.assertTrue(core3(self._assessment((1, 5, 7))).passed)

        # verify item 7 may be not applicable
        self.assertEqual(str(core3(self._assessment((1, 5), na=(7, 8), reasoning_capable=False))), 'pass')

        # verify failing items are named
        self.assertEqual(str(core3(self._assessment((1, 7)))), 'desk_reject(5)')
        self.assertEqual(str(core3(self._assessment(()))), 'desk_reject(1,5,7)')

    def test_frame_coherence(self):
        """tests a frontier frame needs a frontier-tier model"""
        self.assertTrue(frame_coherence(self._assessment()))
        self.assertFalse(frame_coherence(self._assessment(tested_tier_is_frontier=False)))
        self.assertTrue(frame_coherence(self._assessment(
            declared_frame=DeclaredFrame.TIER_SPECIFIC, tested_tier_is_frontier=False,
        )))
        with self.assertRaises(MissingFieldsError):
            frame_coherence(self._assessment(declared_frame=None))

    def test_exemplar_floor(self):
        """tests the exemplar floor needs core3, coherence and three eligible items"""
        self.assertTrue(exemplar_floor(self._assessment((1, 5, 7, 3, 6, 8))))
        self.assertFalse(exemplar_floor(self._assessment((1, 5, 7, 3, 6))))
        self.assertFalse(exemplar_floor(self._assessment((1, 5, 7, 3, 6, 8), tested_tier_is_frontier=False)))
        self.assertFalse(exemplar_floor(self._assessment((1, 5, 3, 6, 8, 9))))

    def test_completeness(self):
        """tests weighted completeness drops not-applicable items"""
        self.assertAlmostEqual(completeness(self._assessment((7, 9))), 0.5)
        self.assertAlmostEqual(
            completeness(self._assessment((9,), na=(7, 8), reasoning_capable=False)), 0.2 / 0.55,
        )
        self.assertIsNone(completeness(self._assessment(na=(7, 8, 9, 10, 11))))

    def test_invalid_assessments(self):
        """tests incomplete item maps and impossible not-applicable reasoning items"""
        with self.assertRaises(MissingFieldsError):
            ChecklistAssessment({1: Disclosure.DISCLOSED})
        with self.assertRaises(ValueError):
            self._assessment(na=(7,), reasoning_capable=True)

    def test_assess_record(self):
        """tests deriving items from an extracted record and its model"""
        record = self._record(
            model='acme-1', eval_date_disclosed=date(2024, 1, 5), human_comparator=True,
            config={'tool_use': disclosed('web search'), 'prompting_strategy': disclosed('few-shot')},
        )
        assessment = assess_record(record, self.table.get('acme-1'))
        self.assertEqual(assessment.status(1), Disclosure.DISCLOSED)
        self.assertEqual(assessment.status(3), Disclosure.DISCLOSED)
        self.assertEqual(assessment.status(5), Disclosure.UNDISCLOSED)
        self.assertEqual(assessment.status(7), Disclosure.NOT_APPLICABLE)
        self.assertEqual(assessment.status(9), Disclosure.DISCLOSED)
        self.assertEqual(assessment.status(13), Disclosure.UNDISCLOSED)
        self.assertTrue(assessment.tested_tier_is_frontier)

        # verify a model without tools makes item 9 not applicable
        beta = assess_record(self._record(model='beta-base'), self.table.get('beta-base'))
        self.assertEqual(beta.status(9), Disclosure.NOT_APPLICABLE)

        # verify an unidentified model discloses nothing about version or tier
        unknown = assess_record(self._record(model='mystery'))
        self.assertEqual(unknown.status(1), Disclosure.UNDISCLOSED)
        self.assertIsNone(unknown.tested_tier_is_frontier)

    def test_summarize(self):
        """tests the summary dictionary used by reports"""
        summary = summarize(self._assessment((1, 5, 7, 3, 6, 8))).as_dict()
        self.assertEqual(summary['core3'], 'pass')
        self.assertTrue(summary['exemplar_floor'])
        self.assertEqual(summary['disclosed_items'], 6)
        self.assertEqual(summary['items']['7'], Disclosure.DISCLOSED)

        # verify an undecidable frame leaves coherence empty
        self.assertIsNone(summarize(self._assessment(declared_frame=None)).frame_coherent)

    def test_load_assessment(self):
        """tests assessment files are validated"""
        items = {str(item): Disclosure.UNDISCLOSED for item in ITEMS}
        items['1'] = Disclosure.DISCLOSED
        path = self._write_json('a.json', {'doi': '10.1000/a', 'items': items, 'declared_frame': 'deployment'})
        assessment = load_assessment(path)
        self.assertEqual(assessment.doi, '10.1000/a')
        self.assertTrue(assessment.disclosed(1))

        items['2'] = 'maybe'
        path = self._write_json('b.json', {'items': items})
        with self.assertRaises(ChecklistFileError):
            load_assessment(path)


class DisclosureLadderTestCase(FixtureTestCase):
    """tests abstract versus full-text disclosure rates"""

    def _surface(self, statuses):
        assessments = {}
        for index, status in enumerate(statuses):
            items = {item: Disclosure.UNDISCLOSED for item in ITEMS}
            items[9] = status
            assessments['10.1000/l{}'.format(index)] = ChecklistAssessment(items)
        return assessments

    def test_ladder(self):
        """tests plain and applicability-conditioned rows"""
        d, u, na = Disclosure.DISCLOSED, Disclosure.UNDISCLOSED, Disclosure.NOT_APPLICABLE
        abstract = self._surface((d, u, u, na))
        full_text = self._surface((d, d, d, na))
        rows = disclosure_ladder(abstract, full_text, items=(9,))
        self.assertEqual(len(rows), 2)

        # verify the plain row keeps every paper
        self.assertEqual((rows[0].abstract_k, rows[0].abstract_n, rows[0].full_text_k), (1, 4, 3))
        self.assertAlmostEqual(rows[0].lift_pp, 50.0)

        # verify the conditioned row drops the not-applicable paper
        self.assertTrue(rows[1].conditioned)
        self.assertEqual((rows[1].abstract_n, rows[1].full_text_n), (3, 3))
        self.assertAlmostEqual(rows[1].lift_pp, 100.0 * (1 - 1 / 3.0))

    def test_lift(self):
        """tests lift in percentage points on realistic counts"""
        row = LadderRow(9, False, 17, 539, 111, 524)
        self.assertAlmostEqual(row.lift_pp, 18.0, delta=0.05)

        row = LadderRow(7, False, 495, 18574, 877, 4757)
        self.assertAlmostEqual(100 * row.abstract_rate, 2.7, delta=0.05)
        self.assertAlmostEqual(100 * row.full_text_rate, 18.4, delta=0.05)

        buffer = io.StringIO()
        write_ladder_csv([LadderRow(9, False, 17, 539, 111, 524)], buffer)
        lines = buffer.getvalue().splitlines()
        self.assertTrue(lines[0].startswith('item,title,conditioned'))
        self.assertTrue(lines[1].startswith('9,Tool use and retrieval,0,17,539,0.0315,111,524,0.2118,18.0'))
