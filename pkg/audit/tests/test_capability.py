from datetime import date

from audit.capability import LookupPolicy, ScoreLookup, load_table, parse_table, table_digest
from audit.exceptions import (
    DuplicateKeyError, MissingScoreError, NoSiblingError, TableIntegrityError, TableParseError, UnknownKeyError,
)
from audit.records import Scale
from audit.tests.helpers import TABLE, FixtureTestCase

HEADER = (
    b'canonical_key,family,tier,release_date,eci,arena_elo,aa_index,price_in,price_out,is_frontier_tier,'
    b'reasoning_capable,reasoning_available_date,tool_capable,aliases\n'
)


def table_bytes(*rows, tiers=b'# tiers.acme: small<large\n'):
    return b'# snapshot: t\n# eci_range: 0,300\n' + tiers + HEADER + b''.join(row + b'\n' for row in rows)


class CapabilityTableTestCase(FixtureTestCase):
    """tests parsing and querying the capability snapshot"""

    def test_parse(self):
        """tests the fixture table parses with its declarations and typed rows"""
        # verify declarations
        self.assertEqual(self.table.snapshot_id, 'fixture-1')
        self.assertEqual(self.table.eci_range, (0.0, 300.0))
        self.assertEqual(self.table.tier_orders['acme'], ('small', 'large'))
        self.assertEqual(len(self.table), 6)

        # verify a typed row
        model = self.table.get('acme-2')
        self.assertEqual(model.release_date, date(2024, 1, 10))
        self.assertEqual(model.score(Scale.ECI), 142.0)
        self.assertEqual(model.score(Scale.AA_INDEX), 40)
        self.assertTrue(model.is_frontier_tier)
        self.assertEqual(model.aliases, frozenset(['acme two', 'acme-2-latest']))

        # verify an unpriced row keeps its prices empty
        self.assertIsNone(self.table.get('beta-max').price_in)
        self.assertEqual(self.table.content_hash, table_digest(TABLE))

    def test_reasoning_availability(self):
        """tests reasoning is only available from its availability date"""
        model = self.table.get('acme-2')

        # verify before and after the availability date
        self.assertFalse(model.reasoning_at(date(2024, 1, 9)))
        self.assertTrue(model.reasoning_at(date(2024, 1, 10)))

        # verify a model without a reasoning mode never has one
        self.assertFalse(self.table.get('acme-1').reasoning_at(date(2025, 1, 1)))

    def test_unknown_key(self):
        """tests looking up a key absent from the table"""
        with self.assertRaises(UnknownKeyError):
            self.table.get('acme-9')
        self.assertNotIn('acme-9', self.table)

    def test_family_members(self):
        """tests family members come back in release order"""
        keys = [model.canonical_key for model in self.table.family_members('acme')]
        self.assertEqual(keys, ['acme-1', 'acme-1-small', 'acme-2', 'acme-2-small'])

    def test_lookup_direct(self):
        """tests a tabulated score is reported as direct"""
        lookup = self.table.lookup_score('beta-max', Scale.ECI)
        self.assertEqual(lookup.score, 149.9)
        self.assertEqual(lookup.provenance, ScoreLookup.DIRECT)
        self.assertEqual(lookup.describe(), 'direct')

    def test_sibling_imputation(self):
        """tests a missing score is imputed from the nearest same-tier sibling only under sibling_impute"""
        table = parse_table(table_bytes(
            b'acme-1,acme,large,2024-01-10,140,,,,,true,false,,true,',
            b'acme-1b,acme,large,2024-03-01,,,,,,true,false,,true,',
            b'acme-1c,acme,large,2024-04-20,145,,,,,true,false,,true,',
            b'acme-1d,acme,large,2025-01-01,,,,,,true,false,,true,',
        ))

        # verify the nearest sibling wins (acme-1c is 50 days away, acme-1 is 51)
        lookup = table.lookup_score('acme-1b', Scale.ECI)
        self.assertEqual(lookup.score, 145.0)
        self.assertTrue(lookup.is_imputed)
        self.assertEqual(lookup.describe(), 'imputed_from(acme-1c)')

        # verify strict lookups refuse to impute
        with self.assertRaises(MissingScoreError):
            table.lookup_score('acme-1b', Scale.ECI, LookupPolicy.STRICT)

        # verify no sibling inside the window
        with self.assertRaises(NoSiblingError):
            table.lookup_score('acme-1d', Scale.ECI)

    def test_sibling_imputation_tie(self):
        """tests equidistant siblings resolve to the earlier release"""
        table = parse_table(table_bytes(
            b'acme-a,acme,large,2024-01-01,140,,,,,true,false,,true,',
            b'acme-b,acme,large,2024-01-11,,,,,,true,false,,true,',
            b'acme-c,acme,large,2024-01-21,150,,,,,true,false,,true,',
        ))
        self.assertEqual(table.lookup_score('acme-b', Scale.ECI).source_key, 'acme-a')

    def test_parse_errors(self):
        """tests malformed tables are rejected with the offending row"""
        # verify duplicate keys
        with self.assertRaises(DuplicateKeyError):
            parse_table(table_bytes(
                b'acme-1,acme,large,2024-01-10,140,,,,,true,false,,true,',
                b'acme-1,acme,large,2024-01-11,141,,,,,true,false,,true,',
            ))

        # verify scores outside the declared ECI range
        with self.assertRaises(TableParseError) as raised:
            parse_table(table_bytes(b'acme-1,acme,large,2024-01-10,400,,,,,true,false,,true,'))
        self.assertEqual(raised.exception.row, 5)

        # verify undeclared tiers and families
        with self.assertRaises(TableParseError):
            parse_table(table_bytes(b'acme-1,acme,huge,2024-01-10,140,,,,,true,false,,true,'))
        with self.assertRaises(TableParseError):
            parse_table(table_bytes(b'zeta-1,zeta,large,2024-01-10,140,,,,,true,false,,true,'))

        # verify non-integer AA index values
        with self.assertRaises(TableParseError):
            parse_table(table_bytes(b'acme-1,acme,large,2024-01-10,140,,40.5,,,true,false,,true,'))

        # verify a reasoning date before the family's first reasoning release
        with self.assertRaises(TableParseError):
            parse_table(table_bytes(
                b'acme-1,acme,large,2024-01-10,140,,,,,true,true,2024-01-10,true,',
                b'acme-2,acme,large,2024-06-01,150,,,,,true,true,2023-12-01,true,',
            ))

    def test_load_checks_digest(self):
        """tests loading verifies an explicit or companion digest"""
        path = self._write('table.csv', TABLE)

        # verify a matching digest loads
        table = load_table(path, expected_hash=table_digest(TABLE))
        self.assertEqual(table, self.table)

        # verify a mismatched companion digest is refused
        self._write('table.csv.sha256', '0' * 64 + '  table.csv\n')
        with self.assertRaises(TableIntegrityError):
            load_table(path)
