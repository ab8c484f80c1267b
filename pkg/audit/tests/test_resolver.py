from datetime import date

from audit.capability import parse_table
from audit.exceptions import TableParseError
from audit.resolver import ModelMention, Unresolved, is_resolved, load_aliases, normalize, resolve
from audit.tests.helpers import TABLE, FixtureTestCase


class ResolverTestCase(FixtureTestCase):
    """tests mapping raw model tokens to canonical keys"""

    def _resolve(self, token, when=date(2024, 6, 1)):
        return resolve(ModelMention(token, when), self.aliases, self.table)

    def test_normalize(self):
        """tests token normalization folds case, dashes, separators and vendor prefixes"""
        self.assertEqual(normalize('OpenAI/GPT–4o'), 'gpt-4o')
        self.assertEqual(normalize('  Anthropic Claude_3  Opus '), 'claude-3-opus')
        self.assertEqual(normalize('meta-llama/Llama‑2 70B'), 'llama-2-70b')

    def test_exact_and_normalized(self):
        """tests canonical keys pass through, spelled exactly or loosely"""
        self.assertEqual(self._resolve('acme-2'), 'acme-2')
        self.assertEqual(self._resolve('ACME 2'), 'acme-2')
        self.assertEqual(self._resolve('openai/acme—2'), 'acme-2')

    def test_aliases(self):
        """tests explicit aliases and the table's alias column"""
        self.assertEqual(self._resolve('Acme-Two-Preview'), 'acme-2')
        self.assertEqual(self._resolve('Acme One'), 'acme-1')
        self.assertEqual(self._resolve('acme_2_latest'), 'acme-2')

    def test_family_default(self):
        """tests a bare family token resolves to the family's earliest release"""
        self.assertEqual(self._resolve('Acme'), 'acme-1')

    def test_routing(self):
        """tests product-surface tokens route on the context date"""
        # verify either side of the threshold
        self.assertEqual(self._resolve('AcmeChat', date(2024, 1, 9)), 'acme-1')
        self.assertEqual(self._resolve('AcmeChat', date(2024, 1, 10)), 'acme-2')
        self.assertEqual(self._resolve('Acme-Chat', date(2024, 1, 10)), 'acme-2')

        # verify routing without a date is ambiguous
        result = self._resolve('AcmeChat', None)
        self.assertFalse(is_resolved(result))
        self.assertEqual(result.reason, Unresolved.AMBIGUOUS_ROUTING)

    def test_no_match(self):
        """tests unknown tokens are unresolved rather than guessed"""
        result = self._resolve('acme-3')
        self.assertIsInstance(result, Unresolved)
        self.assertEqual(result.reason, Unresolved.NO_MATCH)
        self.assertFalse(result)

        # verify an empty mention is refused outright
        with self.assertRaises(ValueError):
            ModelMention('  ')

    def test_alias_validation(self):
        """tests alias maps naming unknown keys are refused"""
        path = self._write('bad_aliases.csv', 'kind,token,target_key,threshold_date,pre_key,post_key\n'
                                              'alias,acme-three,acme-3,,,\n')
        with self.assertRaises(TableParseError):
            load_aliases(path, self.table)

        # verify a routing rule needs both targets
        path = self._write('bad_routing.csv', 'kind,token,target_key,threshold_date,pre_key,post_key\n'
                                              'routing,acmechat,,2024-01-10,acme-1,\n')
        with self.assertRaises(TableParseError):
            load_aliases(path, self.table)

    def test_duplicate_tokens(self):
        """tests one routing rule per spelling and one target per table alias"""
        path = self._write('twice.csv', 'kind,token,target_key,threshold_date,pre_key,post_key\n'
                                        'routing,acmechat,,2024-01-10,acme-1,acme-2\n'
                                        'routing,acme-chat,,2024-01-10,acme-1,acme-2\n')
        with self.assertRaises(TableParseError):
            load_aliases(path, self.table)

        # verify two table rows claiming one alias are refused
        row = b'acme-2-small,acme,small,2024-02-01,130.0,1200,30,0.30,1.20,false,false,,true,'
        table = parse_table(TABLE.replace(row, row + b'Acme_Two'))
        with self.assertRaises(TableParseError):
            load_aliases(self._path('aliases.csv'), table)
