import json
import os
import shutil
import tempfile
from datetime import date

from django.conf import settings
from django.test import SimpleTestCase

from audit.capability import parse_table
from audit.conf import audit_setting
from audit.corpus import write_corpus
from audit.failure import ScaffoldBaselines, load_admissibility
from audit.gaps import load_lag_medians
from audit.pipeline import AuditContext
from audit.records import ConfigField, Disclosure, PaperRecord
from audit.resolver import load_aliases
from audit.stats import load_confusion

TABLE = b"""# snapshot: fixture-1
# eci_range: 0,300
# tiers.acme: small<large
# tiers.beta: base<max
canonical_key,family,tier,release_date,eci,arena_elo,aa_index,price_in,price_out,is_frontier_tier,reasoning_capable,reasoning_available_date,tool_capable,aliases
acme-1,acme,large,2023-01-15,120.0,1150,20,10.00,30.00,true,false,,true,acme one
acme-1-small,acme,small,2023-02-01,110.0,1100,15,0.50,1.50,false,false,,true,
beta-base,beta,base,2023-06-01,115.0,1120,18,1.00,2.00,false,false,,false,
acme-2,acme,large,2024-01-10,142.0,1250,40,5.00,15.00,true,true,2024-01-10,true,acme two|acme-2-latest
acme-2-small,acme,small,2024-02-01,130.0,1200,30,0.30,1.20,false,false,,true,
beta-max,beta,max,2024-03-01,149.9,1300,50,,,true,false,,false,
"""

ALIASES = """kind,token,target_key,threshold_date,pre_key,post_key
routing,acmechat,,2024-01-10,acme-1,acme-2
alias,acme-two-preview,acme-2,,,
family_default,acme,acme,,,
"""

# (doi suffix, domain, journal, publication date, model, valence, framing, comparator)
CORPUS_ROWS = (
    ('a01', 'medicine', 'J1', date(2023, 9, 1), 'acme-1-small', 'negative', 'ai_generic', False),
    ('a02', 'medicine', 'J2', date(2023, 11, 15), 'acme-1', 'positive', 'model_specific', True),
    ('a03', 'coding', 'J1', date(2024, 2, 1), 'beta-base', 'negative', 'ai_generic', False),
    ('a04', 'coding', 'J2', date(2024, 6, 1), 'acme-1', 'positive', 'model_specific', False),
    ('a05', 'medicine', 'J1', date(2024, 9, 1), 'acme-2', 'negative', 'ai_generic', False),
    ('a06', 'medicine', 'J2', date(2024, 9, 1), 'acme-1', 'positive', 'ai_generic', True),
    ('a07', 'coding', 'J1', date(2024, 10, 1), 'acme-2-small', 'positive', 'model_specific', False),
    ('a08', 'coding', 'J2', date(2025, 3, 1), 'acme-2', 'negative', 'ai_generic', False),
    ('a09', 'medicine', 'J1', date(2025, 5, 1), 'beta-base', 'positive', 'ai_generic', False),
    ('a10', 'coding', 'J2', date(2025, 6, 1), 'acme-1-small', 'negative', 'model_specific', True),
    ('a11', 'medicine', 'J2', date(2025, 2, 1), 'acme-2-small', 'negative', 'ai_generic', False),
    ('a12', 'coding', 'J1', date(2023, 12, 1), 'acme-1-small', 'positive', 'ai_generic', False),
)


def fixture_table():
    return parse_table(TABLE)


def disclosed(value=None):
    return ConfigField(Disclosure.DISCLOSED, value)


def undisclosed():
    return ConfigField(Disclosure.UNDISCLOSED)


class FixtureTestCase(SimpleTestCase):
    """tests against the fixture capability table and a scratch directory"""

    def setUp(self):
        self.directory = tempfile.mkdtemp(prefix='frontierlag-test-')
        self.addCleanup(shutil.rmtree, self.directory, True)
        self.table = fixture_table()
        self.aliases = load_aliases(self._write('aliases.csv', ALIASES), self.table)

    def _path(self, name):
        return os.path.join(self.directory, name)

    def _write(self, name, content):
        path = self._path(name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        mode = 'wb' if isinstance(content, bytes) else 'w'
        with open(path, mode) as handle:
            handle.write(content)
        return path

    def _write_json(self, name, data):
        return self._write(name, json.dumps(data))

    def _record(self, doi='10.1000/x1', publication_date=date(2024, 9, 1), journal='J1', domain='medicine',
                model='acme-2', **kwargs):
        kwargs.setdefault('primary_model_raw', model)
        return PaperRecord(doi=doi, publication_date=publication_date, journal=journal, domain=domain, **kwargs)

    def _context(self, **overrides):
        options = {
            'table': self.table,
            'aliases': self.aliases,
            'admissibility': load_admissibility(audit_setting('ADMISSIBILITY_RULES')),
            'baselines': ScaffoldBaselines([('acme', date(2023, 6, 1), 'acme agent loop')]),
            'lag_medians': load_lag_medians(audit_setting('LAG_MEDIANS')),
            'framing_confusion': load_confusion(audit_setting('FRAMING_CONFUSION')),
            'valence_confusion': load_confusion(audit_setting('VALENCE_CONFUSION')),
            'bootstrap_draws': 40,
            'permutation_draws': 40,
            'measurement_error_draws': 20,
            'seed': 7,
        }
        options.update(overrides)
        return AuditContext(**options)

    def _corpus_records(self):
        records = []
        for suffix, domain, journal, published, model, valence, framing, comparator in CORPUS_ROWS:
            records.append(self._record(
                doi='10.1000/{}'.format(suffix), publication_date=published, journal=journal, domain=domain,
                model=model, conclusion_valence=valence, conclusion_framing=framing, human_comparator=comparator,
                config={'reasoning_mode': undisclosed(), 'prompting_strategy': disclosed('zero-shot')},
            ))
        return records

    def _corpus_file(self, name='corpus.jsonl', records=None, extra_lines=(), header=None):
        path = self._path(name)
        write_corpus(self._corpus_records() if records is None else records, path)
        if header is not None or extra_lines:
            with open(path, 'r', encoding='utf-8') as handle:
                lines = handle.read().splitlines()
            if header is not None:
                lines[0] = json.dumps(header, sort_keys=True)
            lines.extend(extra_lines)
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('\n'.join(lines) + '\n')
        return path

    def _settings(self, **overrides):
        """FRONTIERLAG pointing at the fixture table, alias map and a scratch cache"""
        values = dict(settings.FRONTIERLAG)
        values.update({
            'CAPABILITY_TABLE': self._write('table.csv', TABLE),
            'ALIAS_MAP': self._path('aliases.csv'),
            'SCAFFOLD_BASELINES': self._write('baselines.csv', 'family,available_from,baseline\n'
                                                               'acme,2023-06-01,acme agent loop\n'),
            'METADATA_CACHE_DIR': self._path('cache'),
            'BOOTSTRAP_DRAWS': 40,
            'PERMUTATION_DRAWS': 40,
            'MEASUREMENT_ERROR_DRAWS': 20,
            'SEED': 7,
            'CONTACT_EMAIL': 'audit@example.org',
        })
        values.update(overrides)
        return values
