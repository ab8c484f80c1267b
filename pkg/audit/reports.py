"""
Report assembly for single-DOI audits and corpus runs.

Reports are built as plain dicts from the serializers, rendered to JSON with
DRF's JSONRenderer and to text from the parsed JSON, so both renderings carry
the same numbers. Corpus runs write every output through one OutputBundle in
a fixed order and finish with a manifest of content hashes.
"""
import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from rest_framework.renderers import JSONRenderer

from audit import inference, stats
from audit.checklist import assess_record, disclosure_ladder, load_assessment, summarize, write_ladder_csv
from audit.conf import audit_setting
from audit.corpus import load_corpus, parse_record
from audit.coverage import coverage_battery
from audit.exceptions import AuditError, CorpusHeaderError, RecordFileError
from audit.failure import (
    DIMENSIONS, Denominator, cell_label, corpus_rates, elicitation_clauses, threshold_percentile, threshold_sweep,
    upset_decomposition, write_verdicts_csv,
)
from audit.frontier import Frontier, Variant, build_domain_index
from audit.gaps import DOMAIN_LAG, lag_sweep
from audit.metadata import MetadataClient, normalize_doi, skeleton_record
from audit.pipeline import audit_corpus, audit_paper, confident, select_inclusion
from audit.records import Framing, Scale, format_month, month_of
from audit.serializers import (
    CompoundVerdictSerializer, CoverageTestSerializer, GapVectorSerializer, HypothesisReportSerializer,
    SpecificationCurveSerializer, paper_record_data,
)
from audit.waterfall import compound_total, load_chips, uniform_curve, write_plot_csv

logger = logging.getLogger(__name__)

FRAMING_UNKNOWN = 'unknown'
MANIFEST = 'manifest.json'
MANIFEST_SCHEMA = 'frontierlag.manifest'

CONFIRMATORY = 'confirmatory'
DESCRIPTIVE = 'descriptive'
SWEEPS = 'sweeps'
COVERAGE = 'coverage'
ALL = 'all'
SUITES = (CONFIRMATORY, DESCRIPTIVE, SWEEPS, COVERAGE)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


# rendering

def render_json(data):
    return JSONRenderer().render(data, renderer_context={'indent': 2}) + b'\n'


def _scalar(value):
    if value is None:
        return '-'
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def text_lines(data, depth=0):
    """indented key: value lines for parsed JSON"""
    pad = '  ' * depth
    lines = []
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append('{}{}:'.format(pad, key))
            lines.extend(text_lines(value, depth + 1))
        elif isinstance(value, list) and any(isinstance(entry, dict) for entry in value):
            lines.append('{}{}:'.format(pad, key))
            for entry in value:
                lines.append('{}  -'.format(pad))
                lines.extend(text_lines(entry, depth + 2))
        elif isinstance(value, list):
            lines.append('{}{}: [{}]'.format(pad, key, ', '.join(_scalar(entry) for entry in value)))
        else:
            lines.append('{}{}: {}'.format(pad, key, _scalar(value)))
    return lines


def render_text(data, title=None):
    # re-parse so the text shows exactly the numbers the JSON carries
    parsed = json.loads(render_json(data).decode('utf-8'))
    lines = [title, '=' * len(title)] if title else []
    return '\n'.join(lines + text_lines(parsed)) + '\n'


# single-paper reports

def framing_bucket(record):
    if record.conclusion_framing in Framing.values():
        return record.conclusion_framing
    return FRAMING_UNKNOWN


def verdict_reasons(audit, context):
    """the inputs behind each dimension of a compound verdict"""
    record, vector = audit.record, audit.vector
    eval_date = vector.eval_date_used if vector is not None else None
    hidden_reasoning, hidden_tools, default_elicitation = elicitation_clauses(
        record, audit.model, eval_date, context.baselines, context.missing,
    )
    expects = context.admissibility.expects(record) if context.admissibility is not None else None
    return {
        'capability': {
            'gap': audit.gap,
            'tau': context.tau,
            'no_gap_reason': audit.failure,
        },
        'elicitation': {
            'mode': context.elicitation_mode,
            'hidden_reasoning_mode': hidden_reasoning.value,
            'hidden_tool_use': hidden_tools.value,
            'default_elicitation_despite_scaffold': default_elicitation.value,
        },
        'interpretive': {
            'mode': context.interpretive_mode,
            'comparator_expectation': expects,
            'comparator_present': record.human_comparator,
            'framing': record.conclusion_framing,
        },
    }


def record_digest(record):
    content = json.dumps(paper_record_data(record), sort_keys=True)
    return hashlib.sha256(content.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class AuditReport:
    """everything the audit can say about one paper"""
    record: object
    source: str
    audits: dict
    scale: str
    verdict: object
    reasons: dict
    checklist: object
    provenance: dict = field(default_factory=dict)

    def __str__(self):
        return 'AuditReport<{}>'.format(self.doi)

    @property
    def doi(self):
        return self.record.doi

    @property
    def framing_bucket(self):
        return framing_bucket(self.record)

    @property
    def decidable(self):
        return self.verdict.compound.is_decided

    def gap_vectors(self):
        vectors = {}
        for scale, audit in self.audits.items():
            if audit.vector is None:
                vectors[scale] = {'error': audit.failure}
            else:
                vectors[scale] = GapVectorSerializer(audit.vector).data
        return vectors

    def as_dict(self):
        record = self.record
        compound = dict(CompoundVerdictSerializer(self.verdict).data)
        compound['reasons'] = self.reasons
        return {
            'doi': record.doi,
            'record_source': self.source,
            'publication_date': record.publication_date,
            'journal': record.journal,
            'domain': record.domain,
            'primary_model_raw': record.primary_model_raw,
            'gap_vectors': self.gap_vectors(),
            'compound': compound,
            'checklist': self.checklist.as_dict() if self.checklist is not None else None,
            'framing_bucket': self.framing_bucket,
            'provenance': self.provenance,
        }

    def render_json(self):
        return render_json(self.as_dict())

    def render_text(self):
        return render_text(self.as_dict(), 'audit report for {}'.format(self.doi))


def load_record(path):
    """reads one corpus-line JSON object from a file"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, ValueError) as ex:
        raise RecordFileError('{}: cannot read record ({})'.format(path, ex))
    record, message = parse_record(data)
    if record is None:
        raise RecordFileError('{}: {}'.format(path, message))
    return record.with_validated_eval_date()


def find_record(value=None, corpus=None, record_path=None, client=None, offline=False):
    """(record, source) from a record file, the frozen corpus, or live metadata, in that order"""
    if record_path:
        return load_record(record_path), 'record_file'
    doi = normalize_doi(value)
    if corpus is not None:
        record = corpus.by_doi().get(doi)
        if record is not None:
            return record, 'corpus'
        logger.info('%s is not in the corpus; falling back to live metadata', doi)
    client = client or MetadataClient(offline=offline)
    response = client.fetch(doi)
    return skeleton_record(response), response.source


def audit_doi(value, context, corpus=None, record_path=None, client=None, scales=None, offline=False):
    """AuditReport for a DOI or record file

    Gap failures such as an unresolved model are reported in the gap vector
    slot rather than raised; missing fields leave their dimension Unknown.
    """
    record, source = find_record(value, corpus, record_path, client, offline)
    requested = [Scale.parse(scale) for scale in scales or ()]
    scales = [context.scale] + [scale for scale in dict.fromkeys(requested) if scale != context.scale]
    audits = {scale: audit_paper(record, context.derive(scale=scale)) for scale in scales}
    primary = audits[context.scale]

    eval_date = primary.vector.eval_date_used if primary.vector is not None else None
    checklist = summarize(assess_record(record, primary.model, eval_date))
    provenance = dict(context.provenance(), record_sha256=record_digest(record), scales=scales)
    report = AuditReport(
        record=record,
        source=source,
        audits=audits,
        scale=context.scale,
        verdict=primary.verdict,
        reasons=verdict_reasons(primary, context),
        checklist=checklist,
        provenance=provenance,
    )
    logger.info('audited %s from %s: compound %s', record.doi, source, report.verdict.compound)
    return report


# corpus runs

class OutputBundle(object):
    """writes outputs in call order and remembers their hashes for the manifest"""

    def __init__(self, directory):
        self.directory = directory
        self.entries = []
        self.failures = []
        os.makedirs(directory, exist_ok=True)

    def __len__(self):
        return len(self.entries)

    @property
    def names(self):
        return [entry['name'] for entry in self.entries]

    def add(self, name, content):
        with open(os.path.join(self.directory, name), 'wb') as handle:
            handle.write(content)
        self.entries.append({'name': name, 'sha256': hashlib.sha256(content).hexdigest(), 'bytes': len(content)})

    def json(self, name, data):
        self.add(name, render_json(data))

    def csv(self, name, write):
        buffer = io.StringIO()
        write(buffer)
        self.add(name, buffer.getvalue().encode('utf-8'))

    def attempt(self, name, produce):
        """runs produce(); an AuditError is logged and listed as a failed output"""
        try:
            produce()
        except AuditError as ex:
            logger.warning('%s not produced: %s', name, ex)
            self.failures.append({'name': name, 'error': '{}: {}'.format(type(ex).__name__, ex)})


def _cell(value):
    return '' if value is None else value


def hypothesis_data(reports):
    return [HypothesisReportSerializer(report).data for report in reports]


def write_rates_csv(verdicts, handle, conf=0.95):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('denominator', 'rate', 'ci_low', 'ci_high', 'k', 'n'))
    for denominator in Denominator.values():
        try:
            result = corpus_rates(verdicts, denominator, conf)
        except AuditError:
            writer.writerow((denominator, '', '', '', 0, 0))
            continue
        writer.writerow((denominator, result.rate, result.ci[0], result.ci[1], result.k, result.n))


def write_upset_csv(verdicts, handle):
    upset = upset_decomposition(verdicts)
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('cell',) + DIMENSIONS + ('count', 'share'))
    for cell in sorted(upset.cells, reverse=True):
        count = upset.cells[cell]
        writer.writerow(
            (cell_label(cell),) + tuple(int(flag) for flag in cell)
            + (count, count / float(upset.n) if upset.n else 0.0)
        )


GAP_COLUMNS = (
    'doi', 'scale', 'primary_model', 'eval_date_used', 'eval_date_source', 'temporal_gap', 'frontier_key',
    'frontier_score', 'model_score', 'score_provenance', 'tier_gap', 'elicitation_index', 'shortfall',
)


def write_gaps_csv(audits, handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(GAP_COLUMNS + ('failure',))
    for audit in audits:
        if audit.vector is None:
            writer.writerow((audit.doi,) + ('',) * (len(GAP_COLUMNS) - 1) + (audit.failure,))
            continue
        writer.writerow(tuple(_cell(getattr(audit.vector, name)) for name in GAP_COLUMNS) + ('',))


def write_lag_sweep_csv(cells, handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('lag', 'scale', 'h1_median', 'h2_slope', 'h3_median', 'n', 'n_dyad', 'clip_count', 'n_failed'))
    for cell in cells:
        writer.writerow((
            cell.lag, cell.scale, _cell(cell.h1_median), _cell(cell.h2_slope), _cell(cell.h3_median), cell.n,
            cell.n_dyad, cell.clip_count, cell.n_failed,
        ))


def write_threshold_csv(points, gaps, handle):
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(('label', 'tau', 'gap_percentile', 'rate', 'ci_low', 'ci_high', 'k', 'n'))
    for point in points:
        writer.writerow((
            point.label, point.tau, threshold_percentile(gaps, point.tau) if gaps else '', _cell(point.rate),
            _cell(point.ci[0]), _cell(point.ci[1]), point.k, point.n,
        ))


def write_curve_csv(curve, handle):
    names = [name for name, _ in curve.axes]
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(tuple(names) + ('estimate', 'p', 'reject', 'n', 'error'))
    for cell in curve.cells:
        writer.writerow(tuple(cell.spec[name] for name in names) + (
            _cell(cell.estimate), _cell(cell.p), int(cell.reject), cell.n, _cell(cell.error),
        ))


def write_uniform_csv(handle):
    writer = csv.DictWriter(handle, fieldnames=('g', 'k', 'total'), lineterminator='\n')
    writer.writeheader()
    for row in uniform_curve():
        writer.writerow(row)


def engine_options(context, records):
    """GapEngine keyword arguments matching a context, for engines built outside it"""
    options = {
        'policy': context.policy, 'window_days': context.window_days, 'window_mode': context.window_mode,
        'missing': context.missing, 'variant': context.variant, 'price_factor': context.price_factor,
        'routing': context.routing,
    }
    if context.variant == Variant.DOMAIN:
        options['domain_index'] = build_domain_index(records, context.table)
    return options


@dataclass(frozen=True)
class RunInputs:
    """what one corpus run reads besides the AuditContext"""
    corpus: object
    records: tuple
    audits: tuple
    residual: object = None
    full_text: dict = None


def run_confirmatory(bundle, inputs, context, rng):
    def produce():
        for report in inference.run_confirmatory_family(list(inputs.audits), context, rng):
            bundle.json('{}.json'.format(report.id), HypothesisReportSerializer(report).data)

    bundle.attempt(CONFIRMATORY, produce)


def run_descriptive(bundle, inputs, context, rng):
    audits = list(inputs.audits)
    verdicts = [audit.verdict for audit in audits]
    conf = 1 - context.alpha

    def report(name, build):
        bundle.attempt(name, lambda: bundle.json(name, HypothesisReportSerializer(build()).data))

    def table(name, write):
        bundle.attempt(name, lambda: bundle.csv(name, write))

    bundle.attempt('descriptive_family.json', lambda: bundle.json(
        'descriptive_family.json', hypothesis_data(inference.run_descriptive_family(audits, context)),
    ))
    report('class_share_corrected.json', lambda: inference.class_share_corrected(audits, context, rng))
    report('class_share_trend.json', lambda: inference.class_share_trend(audits, context))
    report('H2.json', lambda: inference.h2_pooled_slope(audits, context, rng))
    report('H8.json', lambda: inference.h8_excess_lag(audits, context, rng))
    table('rates.csv', lambda handle: write_rates_csv(verdicts, handle, conf))
    table('upset.csv', lambda handle: write_upset_csv(verdicts, handle))
    table('verdicts.csv', lambda handle: write_verdicts_csv(verdicts, handle))
    table('gaps.csv', lambda handle: write_gaps_csv(audits, handle))
    bundle.attempt('frontier.csv', lambda: write_frontier(bundle, inputs, context))
    bundle.attempt('scale_agreement.json', lambda: bundle.json(
        'scale_agreement.json', scale_agreement_data(context, conf, inputs),
    ))
    bundle.attempt('waterfall.csv', lambda: write_waterfall(bundle))
    if inputs.full_text:
        bundle.attempt('ladder.csv', lambda: write_ladder(bundle, inputs))


def write_frontier(bundle, inputs, context):
    scored = [model.release_date for model in context.table if model.score(context.scale) is not None]
    if not scored or not inputs.records:
        return
    start = month_of(min(scored))
    end = month_of(max(record.publication_date for record in inputs.records))
    if end < start:
        return
    trajectory = Frontier(context.table, context.scale, Variant.ABSOLUTE).trajectory(start, end)
    logger.info('frontier trajectory %s to %s', format_month(start), format_month(end))
    bundle.csv('frontier.csv', trajectory.write_csv)


def scale_agreement_data(context, conf, inputs):
    """model-level agreement between every pair of scales, plus paper-level gap agreement"""
    scales = Scale.values()
    audits = {
        scale: list(inputs.audits) if scale == context.scale
        else audit_corpus(list(inputs.records), context.derive(scale=scale))
        for scale in scales
    }
    models, papers = {}, {}
    for index, first in enumerate(scales):
        for second in scales[index + 1:]:
            pair = '{}~{}'.format(first, second)
            try:
                models[pair] = asdict(inference.scale_agreement(context.table, first, second, conf))
            except AuditError as ex:
                models[pair] = {'error': str(ex)}
            try:
                papers[pair] = asdict(inference.gap_agreement(audits[first], audits[second], conf))
            except (AuditError, ValueError) as ex:
                papers[pair] = {'error': str(ex)}
    return {'models': models, 'papers': papers}


def write_waterfall(bundle):
    sequence = load_chips(audit_setting('WATERFALL_CHIPS'))
    logger.info('waterfall compounds to %.3f over %d chips', compound_total(sequence), len(sequence))
    bundle.csv('waterfall.csv', lambda handle: write_plot_csv(sequence, handle))
    bundle.csv('uniform_attenuation.csv', write_uniform_csv)


def write_ladder(bundle, inputs):
    abstract = {}
    for audit in inputs.audits:
        eval_date = audit.vector.eval_date_used if audit.vector is not None else None
        abstract[audit.doi] = assess_record(audit.record, audit.model, eval_date)
    rows = disclosure_ladder(abstract, inputs.full_text)
    bundle.csv('ladder.csv', lambda handle: write_ladder_csv(rows, handle))


def run_sweeps(bundle, inputs, context, rng):
    records = list(inputs.records)
    audits = list(inputs.audits)
    verdicts = [audit.verdict for audit in audits]

    def sweep_lags():
        lags = audit_setting('LAG_SWEEP')
        cells = lag_sweep(
            records, context.table, context.aliases, lags, Scale.values(),
            lag_medians=context.lag_medians if DOMAIN_LAG in lags else None, **engine_options(context, records)
        )
        bundle.csv('lag_sweep.csv', lambda handle: write_lag_sweep_csv(cells, handle))

    def sweep_thresholds():
        points = threshold_sweep(
            verdicts, audit_setting('THRESHOLD_SWEEP'), audit_setting('PERCENTILE_SWEEP'),
            Denominator.ADMISSIBILITY_EXPECTED, 1 - context.alpha,
        )
        gaps = [verdict.gap for verdict in verdicts if verdict.gap is not None]
        bundle.csv('threshold_sweep.csv', lambda handle: write_threshold_csv(points, gaps, handle))

    bundle.attempt('lag_sweep.csv', sweep_lags)
    bundle.attempt('threshold_sweep.csv', sweep_thresholds)

    summaries = {}
    for hypothesis in sorted(inference.CURVE_AXES):
        name = 'spec_curve_{}.csv'.format(hypothesis)

        def curve(hypothesis=hypothesis, name=name):
            result = inference.hypothesis_curve(records, context, hypothesis, rng=rng)
            bundle.csv(name, lambda handle: write_curve_csv(result, handle))
            summaries[hypothesis] = SpecificationCurveSerializer(result).data

        bundle.attempt(name, curve)
    if summaries:
        bundle.json('spec_curves.json', summaries)

    def deployment():
        families = inference.h10_deployment_rerun(records, context, rng)
        bundle.json('H10.json', {name: hypothesis_data(reports) for name, reports in families.items()})

    bundle.attempt('H10.json', deployment)
    bundle.attempt('drop_imputed.json', lambda: bundle.json(
        'drop_imputed.json', hypothesis_data(inference.drop_imputed_rerun(records, context, rng)),
    ))
    bundle.attempt('permutation.json', lambda: bundle.json('permutation.json', permutation_data(audits, context, rng)))


def _null_summary(result):
    null = np.asarray(result.null)
    summary = {
        'scheme': result.scheme, 'observed': result.observed, 'percentile': result.percentile, 'draws': len(null),
    }
    if null.size:
        summary['p_upper'] = float(np.mean(null >= result.observed))
        summary['null_p10'], summary['null_median'], summary['null_p90'] = (
            float(value) for value in np.percentile(null, [10, 50, 90])
        )
    return summary


def permutation_data(audits, context, rng):
    """sign-flip null for the median gap and year-shuffle null for the pooled slope"""
    rows = [audit for audit in audits if audit.gap is not None]
    gaps = [audit.gap for audit in rows]
    data = {
        inference.Hypothesis.H1: _null_summary(inference.permutation_null(
            lambda values: float(np.median(values)), gaps, inference.PermutationScheme.SIGN_FLIP,
            context.permutation_draws, rng, workers=context.workers,
        )),
    }
    domains = [audit.domain for audit in rows]
    try:
        data[inference.Hypothesis.H2] = _null_summary(inference.permutation_null(
            lambda values, years: stats.pooled_domain_slope(values, years, domains).pooled, gaps,
            inference.PermutationScheme.YEAR_SHUFFLE, context.permutation_draws, rng,
            years=[audit.year for audit in rows], workers=context.workers,
        ))
    except AuditError as ex:
        data[inference.Hypothesis.H2] = {'error': str(ex)}
    return data


def inclusion_counts(corpus, label):
    """(included, classified-relevant) from a corpus header"""
    classified = corpus.header.get('classified')
    if classified is None:
        raise CorpusHeaderError('the {} corpus header has no "classified" count'.format(label))
    return len(corpus.records), int(classified)


def run_coverage(bundle, inputs, context, rng):
    if inputs.residual is None:
        logger.info('coverage suite skipped: no residual corpus')
        return

    def produce():
        residual = inputs.residual
        population = residual.header.get('population')
        report = coverage_battery(
            list(inputs.records), list(residual.records), inclusion_counts(inputs.corpus, 'corpus'),
            inclusion_counts(residual, 'residual'), context.table, context.aliases, alpha=context.alpha,
            residual_population=int(population) if population is not None else None,
        )
        bundle.json('coverage.json', {
            'k': report.k,
            'per_test_alpha': report.per_test_alpha,
            'tests': [CoverageTestSerializer(test).data for test in report.tests],
            'omnibus': {
                family: {'statistic': result.statistic, 'p': result.p_value, 'df': result.df}
                for family, result in sorted(report.omnibus.items())
            },
            'gap_proxy': report.gap_proxy,
            'capture': asdict(report.capture) if report.capture is not None else None,
        })

    bundle.attempt('coverage.json', produce)


SUITE_RUNNERS = {
    CONFIRMATORY: run_confirmatory,
    DESCRIPTIVE: run_descriptive,
    SWEEPS: run_sweeps,
    COVERAGE: run_coverage,
}


@dataclass(frozen=True)
class RunResult:
    manifest: dict
    exit_code: int
    directory: str

    @property
    def outputs(self):
        return [entry['name'] for entry in self.manifest['outputs']]


def load_full_text(directory):
    """DOI -> ChecklistAssessment for every JSON file in a directory"""
    assessments = {}
    for name in sorted(os.listdir(directory)):
        if name.endswith('.json'):
            assessment = load_assessment(os.path.join(directory, name))
            assessments[assessment.doi.lower()] = assessment
    return assessments


def corpus_run(corpus_path, suite, out_dir, context, residual_path=None, full_text_dir=None):
    """runs one suite (or all) over a frozen corpus and writes a manifest last

    Returns a RunResult whose exit code is 2 when corpus lines were rejected
    or some output could not be produced, 0 otherwise.
    """
    if suite != ALL and suite not in SUITES:
        raise ValueError('unknown suite "{}"'.format(suite))
    if suite == COVERAGE and residual_path is None:
        raise ValueError('the coverage suite needs a residual corpus')
    corpus = load_corpus(corpus_path)
    residual = load_corpus(residual_path) if residual_path else None
    records = confident(select_inclusion(corpus.records), context.confidence_floor)
    audits = audit_corpus(records, context)
    inputs = RunInputs(
        corpus=corpus,
        records=tuple(records),
        audits=tuple(audits),
        residual=residual,
        full_text=load_full_text(full_text_dir) if full_text_dir else None,
    )

    bundle = OutputBundle(out_dir)
    rng = context.rng()
    for name in (SUITES if suite == ALL else (suite,)):
        logger.info('running %s suite over %d papers', name, len(audits))
        SUITE_RUNNERS[name](bundle, inputs, context, rng)

    hashes = {'corpus': corpus.content_hash, 'capability_table': context.table.content_hash}
    if residual is not None:
        hashes['residual'] = residual.content_hash
    exit_code = EXIT_PARTIAL if corpus.errors or bundle.failures else EXIT_OK
    manifest = {
        'schema': MANIFEST_SCHEMA,
        'suite': suite,
        'seed': context.seed,
        'inputs': hashes,
        'provenance': context.provenance(),
        'corpus': corpus.summary(),
        'rejected_lines': [str(error) for error in corpus.errors],
        'papers': len(audits),
        'papers_without_gap': sum(1 for audit in audits if audit.vector is None),
        'outputs': list(bundle.entries),
        'failed': list(bundle.failures),
        'exit_code': exit_code,
    }
    bundle.add(MANIFEST, render_json(manifest))
    logger.info('%s suite wrote %d outputs to %s (exit %d)', suite, len(bundle) - 1, out_dir, exit_code)
    return RunResult(manifest=manifest, exit_code=exit_code, directory=out_dir)
