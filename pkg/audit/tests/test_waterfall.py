import io

from audit.conf import audit_setting
from audit.exceptions import ChipFileError, NonPositiveBeforeError
from audit.tests.helpers import FixtureTestCase
from audit.waterfall import (
    Chip, ChipSequence, Evidence, compound_total, load_chips, plot_rows, retained_fraction, uniform_attenuation,
    uniform_curve, write_plot_csv,
)


class WaterfallTestCase(FixtureTestCase):
    """tests compounding attenuation over configuration downgrades"""

    def setUp(self):
        super(WaterfallTestCase, self).setUp()
        self.sequence = load_chips(audit_setting('WATERFALL_CHIPS'))

    def test_shipped_chips(self):
        """tests the shipped chip file compounds to its final-over-baseline ratio"""
        self.assertEqual(len(self.sequence), 9)
        self.assertEqual(self.sequence.baseline, 80.8)
        self.assertEqual(self.sequence.final, 10.5)
        self.assertAlmostEqual(compound_total(self.sequence), 0.130, places=3)
        self.assertAlmostEqual(compound_total(self.sequence), 10.5 / 80.8)

        # verify removing scaffolding keeps about half the score
        self.assertAlmostEqual(self.sequence.chips[2].retained, 0.528, places=3)
        self.assertEqual(self.sequence.chips[2].caveat, 'cross_generation')
        self.assertEqual(self.sequence.chips[3].evidence, Evidence.BOUNDED)

    def test_order_independent(self):
        """tests the compound total does not depend on chip order"""
        reordered = tuple(reversed(self.sequence.chips))
        self.assertAlmostEqual(compound_total(reordered), compound_total(self.sequence))

    def test_uniform(self):
        """tests uniform attenuation across axes"""
        self.assertAlmostEqual(uniform_attenuation(0.95, 9), 0.630, places=3)
        self.assertAlmostEqual(uniform_attenuation(0.90, 9), 0.387, places=3)
        self.assertEqual(uniform_attenuation(0.5, 0), 1.0)

        # verify one bar per (g, k) pair
        curve = uniform_curve()
        self.assertEqual(len(curve), 20)
        self.assertEqual(curve[-1], {'g': 0.90, 'k': 9, 'total': round(0.9 ** 9, 6)})

    def test_plot_rows(self):
        """tests plot rows carry the cumulative fraction"""
        rows = plot_rows(self.sequence)
        self.assertEqual(rows[0]['cumulative_fraction'], 1.0)
        self.assertEqual(rows[-1]['cumulative_fraction'], round(10.5 / 80.8, 6))

        buffer = io.StringIO()
        write_plot_csv(self.sequence, buffer)
        lines = buffer.getvalue().splitlines()
        self.assertEqual(lines[0], 'index,label,before,after,retained_fraction,cumulative_fraction,evidence,caveat')
        self.assertEqual(len(lines), 11)

    def test_invalid_sequences(self):
        """tests non-positive scores, rising chips and broken chains"""
        with self.assertRaises(NonPositiveBeforeError):
            retained_fraction(0, 5)
        with self.assertRaises(NonPositiveBeforeError):
            ChipSequence(0)
        with self.assertRaises(ValueError):
            ChipSequence.from_scores(50.0, [('boost', 60.0, Evidence.MEASURED, None)])
        with self.assertRaises(ValueError):
            ChipSequence(50.0, (Chip('gap', 40.0, 30.0),))

    def test_chip_file_errors(self):
        """tests chip files without a baseline or with bad rows"""
        path = self._write('chips.csv', 'index,label,score_after,evidence,caveat\n'
                                        '1,reasoning off,40,measured,\n')
        with self.assertRaises(ChipFileError):
            load_chips(path)

        path = self._write('chips.csv', 'index,label,score_after,evidence,caveat\n'
                                        '0,ceiling,80,baseline,\n'
                                        '1,reasoning off,forty,measured,\n')
        with self.assertRaises(ChipFileError):
            load_chips(path)
