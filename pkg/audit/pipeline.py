"""
Per-paper audit assembly shared by the management commands and the suites.

An AuditContext bundles the frozen inputs (capability table, alias map,
admissibility rules, scaffold baselines, lag medians, confusion matrices) with
the active analytic choices. Everything downstream takes a context rather than
reading settings itself, so one invocation's overrides apply everywhere.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from audit.capability import LookupPolicy, load_table
from audit.conf import audit_setting
from audit.exceptions import AuditError
from audit.failure import (
    AdmissibilityRules, ElicitationMode, FailureClassifier, InterpretiveMode, OpsTags, load_admissibility,
    load_scaffold_baselines,
)
from audit.frontier import Variant, build_domain_index
from audit.gaps import DOMAIN_LAG, GapEngine, MissingConfig, RoutingTreatment, WindowMode, load_lag_medians
from audit.records import Disclosure, InclusionOverride, Scale
from audit.resolver import load_aliases
from audit.seeding import SeededRng
from audit.stats import load_confusion

logger = logging.getLogger(__name__)


class InclusionArm(object):
    """which inclusion decision a corpus run honors"""
    PRIMARY = 'primary'
    MANUAL_OVERRIDE = 'manual_override'

    @classmethod
    def values(cls):
        return cls.PRIMARY, cls.MANUAL_OVERRIDE


class ModelAge(object):
    """release-year cohorts of the tested model"""
    POOLED = 'pooled'
    PRE_2023 = 'pre2023'
    Y2023 = '2023'
    Y2024 = '2024'
    Y2025_PLUS = '2025plus'

    @classmethod
    def values(cls):
        return cls.POOLED, cls.PRE_2023, cls.Y2023, cls.Y2024, cls.Y2025_PLUS

    @classmethod
    def cohort(cls, release_year):
        if release_year is None:
            return None
        if release_year < 2023:
            return cls.PRE_2023
        if release_year == 2023:
            return cls.Y2023
        if release_year == 2024:
            return cls.Y2024
        return cls.Y2025_PLUS


@dataclass(frozen=True)
class AuditContext:
    """frozen inputs plus the analytic choices of one run"""
    table: object
    aliases: object
    admissibility: AdmissibilityRules = None
    baselines: object = None
    lag_medians: dict = field(default_factory=dict)
    framing_confusion: object = None
    valence_confusion: object = None
    scale: str = Scale.ECI
    lag_days: object = 180
    policy: str = LookupPolicy.SIBLING_IMPUTE
    window_days: int = 90
    window_mode: str = WindowMode.SYMMETRIC
    missing: str = MissingConfig.AS_MISSING
    variant: str = Variant.ABSOLUTE
    price_factor: float = 10
    routing: str = RoutingTreatment.ROUTE
    tau: float = 12.0
    elicitation_mode: str = ElicitationMode.OR3
    interpretive_mode: str = InterpretiveMode.AND2
    confidence_floor: float = None
    alpha: float = 0.05
    bootstrap_draws: int = 1500
    permutation_draws: int = 1000
    measurement_error_draws: int = 1000
    measurement_error_gate: float = 0.90
    spec_curve_cap: int = 4096
    seed: int = 0
    workers: int = 1

    def __str__(self):
        return 'AuditContext<{} {} L={} seed={}>'.format(self.table.snapshot_id, self.scale, self.lag_days, self.seed)

    @classmethod
    def from_settings(cls, table_path=None, **overrides):
        """loads every frozen input named in FRONTIERLAG; keyword overrides win"""
        table = load_table(audit_setting('CAPABILITY_TABLE', table_path))
        lag_medians = load_lag_medians(audit_setting('LAG_MEDIANS'))
        lag_days = overrides.pop('lag_days', None)
        if lag_days is None:
            lag_days = audit_setting('DEFAULT_LAG_DAYS')
        if lag_days == DOMAIN_LAG:
            lag_days = dict(lag_medians)
        scale = overrides.pop('scale', None)
        options = {
            'admissibility': load_admissibility(audit_setting('ADMISSIBILITY_RULES')),
            'baselines': load_scaffold_baselines(audit_setting('SCAFFOLD_BASELINES')),
            'lag_medians': lag_medians,
            'framing_confusion': load_confusion(audit_setting('FRAMING_CONFUSION')),
            'valence_confusion': load_confusion(audit_setting('VALENCE_CONFUSION')),
            'scale': Scale.parse(scale or audit_setting('DEFAULT_SCALE')),
            'lag_days': lag_days,
            'policy': audit_setting('LOOKUP_POLICY'),
            'window_days': audit_setting('TIER_WINDOW_DAYS'),
            'window_mode': audit_setting('TIER_WINDOW_MODE'),
            'missing': audit_setting('MISSING_CONFIG'),
            'price_factor': audit_setting('DEPLOYMENT_PRICE_FACTOR'),
            'tau': float(audit_setting('CAPABILITY_THRESHOLD')),
            'elicitation_mode': audit_setting('ELICITATION_MODE'),
            'interpretive_mode': audit_setting('INTERPRETIVE_MODE'),
            'confidence_floor': audit_setting('EXTRACTION_CONFIDENCE_FLOOR'),
            'alpha': audit_setting('ALPHA'),
            'bootstrap_draws': audit_setting('BOOTSTRAP_DRAWS'),
            'permutation_draws': audit_setting('PERMUTATION_DRAWS'),
            'measurement_error_draws': audit_setting('MEASUREMENT_ERROR_DRAWS'),
            'measurement_error_gate': audit_setting('MEASUREMENT_ERROR_GATE'),
            'spec_curve_cap': audit_setting('SPEC_CURVE_CAP'),
            'seed': audit_setting('SEED'),
            'workers': audit_setting('WORKERS'),
        }
        options.update({name: value for name, value in overrides.items() if value is not None})
        aliases = load_aliases(audit_setting('ALIAS_MAP'), table)
        return cls(table=table, aliases=aliases, **options)

    def derive(self, **changes):
        """a copy of this context with some choices changed"""
        if changes.get('lag_days') == DOMAIN_LAG:
            changes['lag_days'] = dict(self.lag_medians)
        return replace(self, **changes)

    @property
    def lag_label(self):
        return DOMAIN_LAG if isinstance(self.lag_days, dict) else self.lag_days

    @property
    def tags(self):
        return OpsTags(self.tau, self.elicitation_mode, self.interpretive_mode)

    def engine(self, domain_index=None):
        return GapEngine(
            self.table, self.aliases, self.scale, lag_days=self.lag_days, policy=self.policy,
            window_days=self.window_days, window_mode=self.window_mode, missing=self.missing,
            variant=self.variant, price_factor=self.price_factor, domain_index=domain_index,
            routing=self.routing,
        )

    def classifier(self):
        return FailureClassifier(
            self.table, baselines=self.baselines, admissibility=self.admissibility, tau=self.tau,
            elicitation_mode=self.elicitation_mode, interpretive_mode=self.interpretive_mode,
            missing=self.missing,
        )

    def rng(self):
        return SeededRng(self.seed)

    def spec_tags(self):
        """the analytic choices that determine a computation path"""
        return {
            'scale': self.scale,
            'lag_days': self.lag_label,
            'lookup_policy': self.policy,
            'tier_window': '{}:{}'.format(self.window_mode, self.window_days),
            'missing_config': self.missing,
            'frontier_variant': self.variant,
            'routing': self.routing,
            'ops': str(self.tags),
        }

    def provenance(self):
        data = {
            'snapshot_id': self.table.snapshot_id,
            'table_sha256': self.table.content_hash,
            'trajectory_variant': self.variant,
            'seed': self.seed,
            'spec_tags': self.spec_tags(),
        }
        if self.variant == Variant.DEPLOYMENT:
            data['price_factor'] = self.price_factor
        return data


@dataclass(frozen=True)
class PaperAudit:
    """one paper's gap vector and compound verdict, or the reason it has no gap"""
    record: object
    vector: object
    verdict: object
    failure: str = None
    model: object = None

    def __str__(self):
        return 'PaperAudit<{}>'.format(self.record.doi)

    @property
    def doi(self):
        return self.record.doi

    @property
    def gap(self):
        return self.vector.temporal_gap if self.vector is not None else None

    @property
    def tier_gap(self):
        return self.vector.tier_gap if self.vector is not None else None

    @property
    def year(self):
        return self.record.publication_year

    @property
    def journal(self):
        return self.record.journal

    @property
    def domain(self):
        return self.record.domain

    @property
    def valence(self):
        return self.record.conclusion_valence

    @property
    def framing(self):
        return self.record.conclusion_framing

    @property
    def reasoning_capable(self):
        """whether the tested model offered reasoning on its eval date, None when unknown"""
        if self.model is None or self.vector is None:
            return None
        return self.model.reasoning_at(self.vector.eval_date_used)

    @property
    def reasoning_disclosed(self):
        status = self.record.config_status('reasoning_mode')
        if status is None:
            return None
        return status == Disclosure.DISCLOSED

    @property
    def imputed_score(self):
        return self.vector is not None and self.vector.is_imputed_score

    @property
    def model_release_year(self):
        return self.model.release_date.year if self.model is not None else None

    @property
    def cohort(self):
        return ModelAge.cohort(self.model_release_year)


def audit_paper(record, context, engine=None, classifier=None):
    """gap vector and verdict for one record; gap failures are carried, not raised"""
    engine = engine or context.engine()
    classifier = classifier or context.classifier()
    try:
        vector = engine.compute(record)
    except AuditError as ex:
        logger.info('%s has no gap vector: %s', record, ex)
        return PaperAudit(record=record, vector=None, verdict=classifier.classify(record, None), failure=str(ex))
    return PaperAudit(
        record=record,
        vector=vector,
        verdict=classifier.classify(record, vector),
        model=context.table.get(vector.primary_model),
    )


def audit_corpus(records, context, workers=None):
    """PaperAudits for every record, sorted by DOI whatever the worker count"""
    records = sorted(records, key=lambda record: record.doi)
    domain_index = build_domain_index(records, context.table) if context.variant == Variant.DOMAIN else None
    engine = context.engine(domain_index)
    classifier = context.classifier()
    for domain in sorted({record.domain for record in records}):
        # frontiers are built up front so worker threads only read them
        engine.frontier_for(domain)

    def run(record):
        return audit_paper(record, context, engine, classifier)

    workers = context.workers if workers is None else workers
    if workers is None or workers <= 1:
        audits = [run(record) for record in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            audits = list(pool.map(run, records))
    failed = sum(1 for audit in audits if audit.vector is None)
    if failed:
        logger.info('%d of %d papers have no gap vector', failed, len(audits))
    return audits


# corpus filters

def select_inclusion(records, arm=InclusionArm.PRIMARY):
    """records included under an inclusion arm

    The primary arm keeps the classifier's decisions, so papers re-adjudicated
    into the corpus are left out; the manual-override arm applies every
    re-adjudication.
    """
    if arm not in InclusionArm.values():
        raise ValueError('unknown inclusion arm "{}"'.format(arm))
    if arm == InclusionArm.PRIMARY:
        return [record for record in records if record.inclusion_override != InclusionOverride.INCLUDE]
    return [record for record in records if record.inclusion_override != InclusionOverride.EXCLUDE]


def confident(records, floor=0.90):
    """drops records with any extraction confidence below floor"""
    if floor is None:
        return list(records)
    kept = [record for record in records if record.min_confidence is None or record.min_confidence >= floor]
    if len(kept) < len(records):
        logger.info('confidence floor %.2f drops %d records', floor, len(records) - len(kept))
    return kept


def in_cohort(audits, cohort=ModelAge.POOLED):
    if cohort not in ModelAge.values():
        raise ValueError('unknown model-age cohort "{}"'.format(cohort))
    if cohort == ModelAge.POOLED:
        return list(audits)
    return [audit for audit in audits if audit.cohort == cohort]


def direct_scores_only(audits):
    """drop-imputed arm: audits whose primary score was tabulated directly"""
    return [audit for audit in audits if audit.vector is not None and not audit.imputed_score]
