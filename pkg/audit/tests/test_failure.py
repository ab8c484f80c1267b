import io
from collections import Counter
from datetime import date
from itertools import product

from audit.exceptions import EmptyDenominatorError
from audit.failure import (
    CompoundVerdict, Denominator, ElicitationMode, InterpretiveMode, TriBool, capability_fail, corpus_rates,
    elicitation_clauses, elicitation_fail, interpretive_fail, reanchor_threshold, threshold_from_anchors,
    threshold_percentile, threshold_sweep, upset_decomposition, write_verdicts_csv,
)
from audit.gaps import MissingConfig
from audit.tests.helpers import FixtureTestCase, disclosed, undisclosed

T, F, U = TriBool.TRUE, TriBool.FALSE, TriBool.UNKNOWN


class TriBoolTestCase(FixtureTestCase):
    """tests three-valued verdict logic"""

    def test_conjunction_table(self):
        """tests the compound over all 27 dimension triples"""
        outcomes = Counter()
        decided = 0
        for triple in product((T, F, U), repeat=3):
            verdict = CompoundVerdict('10.1000/x', *triple)
            outcomes[verdict.compound] += 1
            decided += verdict.fully_decided

            # verify any False decides the compound
            if F in triple:
                self.assertIs(verdict.compound, F)

        # verify one all-True triple, seven undecided, nineteen False
        self.assertEqual(outcomes, Counter({F: 19, U: 7, T: 1}))
        self.assertEqual(decided, 8)

    def test_disjunction(self):
        """tests the three-valued disjunction and negation"""
        self.assertIs(TriBool.disjoin(F, U, T), T)
        self.assertIs(TriBool.disjoin(F, U), U)
        self.assertIs(TriBool.disjoin(F, False), F)
        self.assertIs(~U, U)
        self.assertIs(~T, F)


class ClassifierTestCase(FixtureTestCase):
    """tests the three audit dimensions"""

    def setUp(self):
        super(ClassifierTestCase, self).setUp()
        self.context = self._context()

    def test_threshold(self):
        """tests the capability threshold and its anchor derivation"""
        self.assertEqual(threshold_from_anchors(), 12.0)
        self.assertIs(capability_fail(12.0), T)
        self.assertIs(capability_fail(11.9), F)
        self.assertIs(capability_fail(None), U)
        with self.assertRaises(ValueError):
            capability_fail(5.0, tau=0)

    def test_elicitation_clauses(self):
        """tests hidden tool use and default elicitation despite a published scaffold"""
        record = self._record(model='acme-1', config={
            'tool_use': undisclosed(), 'prompting_strategy': disclosed('Zero-shot'),
        })
        model = self.table.get('acme-1')
        clauses = elicitation_clauses(record, model, date(2024, 3, 5), self.context.baselines)

        # verify no reasoning mode to hide, hidden tools, zero-shot after the scaffold was published
        self.assertEqual(clauses, (F, T, T))

        # verify before the scaffold existed
        clauses = elicitation_clauses(record, model, date(2023, 3, 1), self.context.baselines)
        self.assertEqual(clauses[2], F)

    def test_elicitation_missing_fields(self):
        """tests unextracted fields leave elicitation Unknown unless read as undisclosed"""
        record = self._record()
        model = self.table.get('acme-2')
        when = date(2024, 3, 5)
        self.assertIs(elicitation_fail(record, model, when, self.context.baselines), U)
        self.assertIs(
            elicitation_fail(record, model, when, self.context.baselines, missing=MissingConfig.AS_UNDISCLOSED), T,
        )

        # verify AND3 needs every clause
        full = self._record(config={
            'reasoning_mode': undisclosed(), 'tool_use': undisclosed(), 'prompting_strategy': disclosed('zero shot'),
        })
        self.assertIs(elicitation_fail(full, model, when, self.context.baselines, ElicitationMode.AND3), T)
        partial = self._record(config={
            'reasoning_mode': disclosed('on'), 'tool_use': undisclosed(), 'prompting_strategy': disclosed('zero shot'),
        })
        self.assertIs(elicitation_fail(partial, model, when, self.context.baselines, ElicitationMode.AND3), F)
        self.assertIs(elicitation_fail(partial, model, when, self.context.baselines), T)

    def test_uncovered_scaffold_family(self):
        """tests a family without a scaffold baseline leaves the default-elicitation clause Unknown"""
        record = self._record(model='beta-base', config={
            'reasoning_mode': undisclosed(), 'tool_use': undisclosed(), 'prompting_strategy': disclosed('zero-shot'),
        })
        clauses = elicitation_clauses(record, self.table.get('beta-base'), date(2024, 3, 5), self.context.baselines)
        self.assertEqual(clauses, (F, F, U))

    def test_interpretive(self):
        """tests comparator expectations and framing"""
        rules = self.context.admissibility

        # verify a medical paper without comparator and with AI-generic framing
        record = self._record(human_comparator=False, conclusion_framing='ai_generic')
        self.assertIs(interpretive_fail(record, rules), T)

        # verify a comparator clears the AND2 but not the OR2 reading
        record = self._record(human_comparator=True, conclusion_framing='ai_generic')
        self.assertIs(interpretive_fail(record, rules), F)
        self.assertIs(interpretive_fail(record, rules, InterpretiveMode.OR2), T)

        # verify exempt coding tasks and keyword rules across domains
        coding = self._record(domain='coding', human_comparator=False, conclusion_framing='ai_generic',
                              task_description='code generation from docstrings')
        self.assertIs(interpretive_fail(coding, rules), F)
        exam = self._record(domain='coding', human_comparator=False, conclusion_framing='ai_generic',
                            task_description='answers USMLE step 1 questions')
        self.assertIs(interpretive_fail(exam, rules), T)

        # verify an uncovered domain leaves the comparator clause Unknown
        other = self._record(domain='other', human_comparator=False, conclusion_framing='ai_generic')
        self.assertIs(interpretive_fail(other, rules), U)

        # verify missing framing
        self.assertIs(interpretive_fail(self._record(human_comparator=False), rules), U)

    def test_classify(self):
        """tests a full classification carries the gap and admissibility expectation"""
        record = self._record(model='acme-1', human_comparator=False, conclusion_framing='ai_generic',
                              config={'tool_use': undisclosed()})
        vector = self._context().engine().compute(record)
        verdict = self.context.classifier().classify(record, vector)
        self.assertAlmostEqual(verdict.gap, 29.9)
        self.assertEqual((verdict.capability, verdict.elicitation, verdict.interpretive), (T, T, T))
        self.assertIs(verdict.compound, T)
        self.assertTrue(verdict.admissibility_expected)

        # verify reclassification at a higher threshold
        self.assertIs(verdict.with_threshold(30).compound, F)

        # verify no gap vector leaves capability Unknown
        self.assertIs(self.context.classifier().classify(record, None).capability, U)


class AggregationTestCase(FixtureTestCase):
    """tests corpus-level failure rates"""

    def setUp(self):
        super(AggregationTestCase, self).setUp()
        self.verdicts = [
            CompoundVerdict('10.1000/v1', T, T, T, admissibility_expected=True),
            CompoundVerdict('10.1000/v2', T, F, T, admissibility_expected=True),
            CompoundVerdict('10.1000/v3', U, T, T),
            CompoundVerdict('10.1000/v4', F, U, T, admissibility_expected=True),
            CompoundVerdict('10.1000/v5', F, F, F),
        ]

    def test_denominators(self):
        """tests each denominator keeps the intended papers"""
        expected = {
            Denominator.STRICT_DROPNONE: (1, 3),
            Denominator.TRIVALUED: (1, 4),
            Denominator.ADMISSIBILITY_EXPECTED: (1, 3),
            Denominator.FULL: (1, 4),
        }
        for denominator, (k, n) in expected.items():
            result = corpus_rates(self.verdicts, denominator)
            self.assertEqual((result.k, result.n), (k, n), denominator)
            self.assertLessEqual(result.ci[0], result.rate)
            self.assertGreaterEqual(result.ci[1], result.rate)

        # verify an undecidable compound stays out of the full corpus count
        full = corpus_rates(self.verdicts[:1] + self.verdicts[2:3], Denominator.FULL)
        self.assertEqual((full.k, full.n, full.rate), (1, 1, 1.0))

        # verify an empty denominator
        with self.assertRaises(EmptyDenominatorError):
            corpus_rates(self.verdicts[2:3], Denominator.STRICT_DROPNONE)

    def test_upset(self):
        """tests the decomposition over the eight fully decided cells"""
        upset = upset_decomposition(self.verdicts)
        self.assertEqual(upset.n, 3)
        self.assertEqual(len(upset.cells), 8)
        labelled = upset.labelled()
        self.assertEqual(labelled['capability+elicitation+interpretive'], 1)
        self.assertEqual(labelled['capability+interpretive'], 1)
        self.assertEqual(labelled['none'], 1)
        self.assertAlmostEqual(upset.marginals['capability'], 2 / 3.0)

    def test_threshold_sweep(self):
        """tests rates at fixed and percentile-derived thresholds"""
        verdicts = [
            CompoundVerdict('10.1000/g{}'.format(gap), capability_fail(gap), T, T, gap=gap,
                            admissibility_expected=True)
            for gap in (5.0, 10.0, 15.0, 25.0)
        ]
        points = {point.label: point for point in threshold_sweep(verdicts, (12, 20), (50,))}
        self.assertEqual((points['tau=12'].k, points['tau=12'].n), (2, 4))
        self.assertEqual(points['tau=20'].k, 1)
        self.assertEqual(points['p50'].tau, 10.0)
        self.assertEqual(points['p50'].k, 3)

        # verify percentile placement and re-anchoring on another scale
        gaps = [5.0, 10.0, 15.0, 25.0]
        self.assertEqual(threshold_percentile(gaps, 12), 50.0)
        self.assertEqual(reanchor_threshold(gaps, [50.0, 100.0, 150.0, 250.0], 12), 100.0)

    def test_verdicts_csv(self):
        """tests verdict rows are sorted by DOI"""
        buffer = io.StringIO()
        write_verdicts_csv(reversed(self.verdicts), buffer)
        lines = buffer.getvalue().splitlines()
        self.assertEqual(lines[0], 'doi,capability,elicitation,interpretive,compound,tags')
        self.assertTrue(lines[1].startswith('10.1000/v1,true,true,true,true,'))
        self.assertEqual(len(lines), 6)
