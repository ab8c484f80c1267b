import math

from rest_framework import serializers

from audit.records import (
    CONFIG_FIELDS, PROXY_DATE_FIELDS, ConfigField, DeclaredFrame, Disclosure, Domain, Framing,
    InclusionOverride, PaperRecord, Valence,
)


def blank_to_none(row):
    """maps empty CSV cells to None so optional fields validate as missing"""
    return {
        key: (None if value is None or str(value).strip() == '' else str(value).strip())
        for key, value in row.items()
        if key is not None
    }


def describe_errors(errors):
    """flattens DRF validation errors into one readable line"""
    if isinstance(errors, dict):
        parts = []
        for name in sorted(errors):
            detail = errors[name]
            if isinstance(detail, (list, tuple)):
                detail = ' '.join(describe_errors(entry) for entry in detail)
            elif isinstance(detail, dict):
                detail = describe_errors(detail)
            parts.append('{}: {}'.format(name, detail))
        return '; '.join(parts)
    if isinstance(errors, (list, tuple)):
        return ' '.join(describe_errors(entry) for entry in errors)
    return str(errors)


class FiniteFloatField(serializers.FloatField):
    """float field that refuses NaN and infinities"""

    def to_internal_value(self, data):
        value = super(FiniteFloatField, self).to_internal_value(data)
        if not math.isfinite(value):
            self.fail('invalid')
        return value


# capability table

class ModelRowSerializer(serializers.Serializer):
    """validates one row of the capability table CSV"""
    canonical_key = serializers.CharField()
    family = serializers.CharField()
    tier = serializers.CharField()
    release_date = serializers.DateField()
    eci = FiniteFloatField(required=False, allow_null=True)
    arena_elo = FiniteFloatField(required=False, allow_null=True)
    aa_index = FiniteFloatField(required=False, allow_null=True)
    price_in = FiniteFloatField(required=False, allow_null=True, min_value=0)
    price_out = FiniteFloatField(required=False, allow_null=True, min_value=0)
    is_frontier_tier = serializers.BooleanField()
    reasoning_capable = serializers.BooleanField()
    reasoning_available_date = serializers.DateField(required=False, allow_null=True)
    tool_capable = serializers.BooleanField()
    aliases = serializers.CharField(required=False, allow_null=True, allow_blank=True)

    def validate_canonical_key(self, value):
        return value.strip()

    def validate_aa_index(self, value):
        # the AA index is published at integer-grade resolution
        if value is not None:
            if value != int(value):
                raise serializers.ValidationError('aa_index must be integer-valued')
            return int(value)
        return value

    def validate_aliases(self, value):
        if not value:
            return frozenset()
        return frozenset(token.strip() for token in value.split('|') if token.strip())

    def validate(self, attrs):
        available = attrs.get('reasoning_available_date')
        if available is not None and not attrs['reasoning_capable']:
            raise serializers.ValidationError('reasoning_available_date set on a model that is not reasoning_capable')
        return attrs


class AliasRowSerializer(serializers.Serializer):
    """validates one row of the resolver alias map"""
    KINDS = ('alias', 'family_default', 'routing')

    kind = serializers.ChoiceField(choices=KINDS)
    token = serializers.CharField()
    target_key = serializers.CharField(required=False, allow_null=True)
    threshold_date = serializers.DateField(required=False, allow_null=True)
    pre_key = serializers.CharField(required=False, allow_null=True)
    post_key = serializers.CharField(required=False, allow_null=True)

    def validate(self, attrs):
        kind = attrs['kind']
        if kind == 'routing':
            missing = [name for name in ('threshold_date', 'pre_key', 'post_key') if not attrs.get(name)]
            if missing:
                raise serializers.ValidationError('routing rule needs {}'.format(', '.join(missing)))
        elif not attrs.get('target_key'):
            raise serializers.ValidationError('{} entry needs a target_key'.format(kind))
        return attrs


class AdmissibilityRowSerializer(serializers.Serializer):
    """validates one human-comparator admissibility rule"""
    KINDS = ('keyword', 'domain_default')

    kind = serializers.ChoiceField(choices=KINDS)
    domain = serializers.ChoiceField(choices=Domain.choices(), required=False, allow_null=True)
    pattern = serializers.CharField(required=False, allow_null=True)
    expects = serializers.ChoiceField(choices=('required', 'exempt'))

    def validate(self, attrs):
        if attrs['kind'] == 'keyword' and not attrs.get('pattern'):
            raise serializers.ValidationError('keyword rule needs a pattern')
        if attrs['kind'] == 'domain_default' and not attrs.get('domain'):
            raise serializers.ValidationError('domain_default rule needs a domain')
        return attrs


class ScaffoldBaselineRowSerializer(serializers.Serializer):
    """validates one row of the published-scaffold baseline lookup"""
    family = serializers.CharField()
    available_from = serializers.DateField()
    baseline = serializers.CharField()


class ChipRowSerializer(serializers.Serializer):
    """validates one row of a waterfall chip file"""
    index = serializers.IntegerField(min_value=0)
    label = serializers.CharField()
    score_after = FiniteFloatField()
    evidence = serializers.ChoiceField(choices=('baseline', 'measured', 'bounded'))
    caveat = serializers.CharField(required=False, allow_null=True, allow_blank=True)


class ChecklistAssessmentSerializer(serializers.Serializer):
    """validates one per-paper checklist assessment file"""
    doi = serializers.CharField(required=False, allow_blank=True, default='')
    items = serializers.DictField(child=serializers.ChoiceField(choices=Disclosure.choices()))
    declared_frame = serializers.ChoiceField(choices=DeclaredFrame.choices(), required=False, allow_null=True)
    tested_tier_is_frontier = serializers.BooleanField(required=False, allow_null=True, default=None)
    reasoning_capable = serializers.BooleanField(required=False, allow_null=True, default=None)

    def validate_items(self, value):
        items = {}
        for key, status in value.items():
            try:
                number = int(key)
            except (TypeError, ValueError):
                raise serializers.ValidationError('item keys must be numbers, got "{}"'.format(key))
            if not 1 <= number <= 13:
                raise serializers.ValidationError('item {} is outside 1..13'.format(number))
            items[number] = status
        return items


# corpus records

class ConfigFieldSerializer(serializers.Serializer):
    status = serializers.ChoiceField(choices=Disclosure.choices())
    value = serializers.CharField(required=False, allow_null=True, allow_blank=True)

    def validate(self, attrs):
        if attrs.get('value') and attrs['status'] != Disclosure.DISCLOSED:
            raise serializers.ValidationError('only disclosed fields carry a value')
        return attrs


class PaperRecordSerializer(serializers.Serializer):
    """validates one corpus line and builds a PaperRecord from it"""
    doi = serializers.CharField()
    publication_date = serializers.DateField()
    journal = serializers.CharField()
    domain = serializers.ChoiceField(choices=Domain.choices())
    primary_model_raw = serializers.CharField(required=False, allow_blank=True, default='')
    primary_model = serializers.CharField(required=False, allow_null=True)
    models_evaluated = serializers.ListField(child=serializers.CharField(), required=False, default=list)
    eval_date_disclosed = serializers.DateField(required=False, allow_null=True)
    config = serializers.DictField(child=ConfigFieldSerializer(allow_null=True), required=False, default=dict)
    conclusion_valence = serializers.ChoiceField(choices=Valence.choices(), required=False, allow_null=True)
    conclusion_framing = serializers.ChoiceField(choices=Framing.choices(), required=False, allow_null=True)
    human_comparator = serializers.BooleanField(required=False, allow_null=True, default=None)
    task_description = serializers.CharField(required=False, allow_blank=True, default='')
    extraction_confidence = serializers.DictField(
        child=FiniteFloatField(min_value=0, max_value=1), required=False, default=dict
    )
    declared_frame = serializers.ChoiceField(choices=DeclaredFrame.choices(), required=False, allow_null=True)
    inclusion_override = serializers.ChoiceField(
        choices=InclusionOverride.choices(), required=False, allow_null=True
    )
    proxy_dates = serializers.DictField(child=serializers.DateField(allow_null=True), required=False, default=dict)

    def validate_config(self, value):
        unknown = sorted(set(value) - set(CONFIG_FIELDS))
        if unknown:
            raise serializers.ValidationError('unknown configuration fields: {}'.format(', '.join(unknown)))
        return value

    def validate_proxy_dates(self, value):
        unknown = sorted(set(value) - set(PROXY_DATE_FIELDS))
        if unknown:
            raise serializers.ValidationError('unknown proxy dates: {}'.format(', '.join(unknown)))
        return value

    def validate(self, attrs):
        if not attrs.get('primary_model_raw', '').strip() and not attrs.get('primary_model') \
                and not attrs.get('models_evaluated'):
            raise serializers.ValidationError('record names no model')
        eval_date = attrs.get('eval_date_disclosed')
        if eval_date is not None and eval_date > attrs['publication_date']:
            raise serializers.ValidationError('eval_date_disclosed is after publication_date')
        return attrs

    def create(self, validated_data):
        config = {
            name: ConfigField(status=entry['status'], value=entry.get('value') or None)
            for name, entry in validated_data.get('config', {}).items()
            if entry is not None
        }
        return PaperRecord(
            doi=validated_data['doi'].strip().lower(),
            publication_date=validated_data['publication_date'],
            journal=validated_data['journal'],
            domain=validated_data['domain'],
            primary_model_raw=validated_data.get('primary_model_raw', ''),
            primary_model=validated_data.get('primary_model'),
            models_evaluated=tuple(validated_data.get('models_evaluated', ())),
            eval_date_disclosed=validated_data.get('eval_date_disclosed'),
            config=config,
            conclusion_valence=validated_data.get('conclusion_valence'),
            conclusion_framing=validated_data.get('conclusion_framing'),
            human_comparator=validated_data.get('human_comparator'),
            task_description=validated_data.get('task_description', ''),
            extraction_confidence=dict(validated_data.get('extraction_confidence', {})),
            declared_frame=validated_data.get('declared_frame'),
            inclusion_override=validated_data.get('inclusion_override'),
            proxy_dates={k: v for k, v in validated_data.get('proxy_dates', {}).items() if v is not None},
        )


def paper_record_data(record):
    """plain mapping of a PaperRecord in corpus-line form"""
    data = {
        'doi': record.doi,
        'publication_date': record.publication_date.isoformat(),
        'journal': record.journal,
        'domain': record.domain,
        'primary_model_raw': record.primary_model_raw,
        'primary_model': record.primary_model,
        'models_evaluated': list(record.models_evaluated),
        'eval_date_disclosed': record.eval_date_disclosed.isoformat() if record.eval_date_disclosed else None,
        'config': {
            name: {'status': entry.status, 'value': entry.value}
            for name, entry in sorted(record.config.items())
        },
        'conclusion_valence': record.conclusion_valence,
        'conclusion_framing': record.conclusion_framing,
        'human_comparator': record.human_comparator,
        'task_description': record.task_description,
        'extraction_confidence': dict(sorted(record.extraction_confidence.items())),
        'declared_frame': record.declared_frame,
        'inclusion_override': record.inclusion_override,
        'proxy_dates': {name: value.isoformat() for name, value in sorted(record.proxy_dates.items())},
    }
    return data


# outbound documents

class TriBoolField(serializers.Field):
    """renders a TriBool as its string value"""

    def to_representation(self, value):
        return value.value


class IntervalField(serializers.ListField):
    child = FiniteFloatField(allow_null=True)

    def to_representation(self, data):
        if data is None:
            return [None, None]
        return [None if value is None else float(value) for value in data]


class GapVectorSerializer(serializers.Serializer):
    doi = serializers.CharField()
    scale = serializers.CharField()
    primary_model = serializers.CharField()
    eval_date_used = serializers.DateField()
    eval_date_source = serializers.CharField()
    temporal_gap = serializers.FloatField()
    frontier_key = serializers.CharField()
    frontier_score = serializers.FloatField()
    model_score = serializers.FloatField()
    score_provenance = serializers.CharField()
    tier_gap = serializers.FloatField(allow_null=True)
    elicitation_index = serializers.FloatField(allow_null=True)
    shortfall = serializers.FloatField(allow_null=True)


class CompoundVerdictSerializer(serializers.Serializer):
    doi = serializers.CharField()
    capability = TriBoolField()
    elicitation = TriBoolField()
    interpretive = TriBoolField()
    compound = TriBoolField()
    fully_decided = serializers.BooleanField()
    admissibility_expected = serializers.BooleanField()
    tags = serializers.CharField()


class HypothesisReportSerializer(serializers.Serializer):
    id = serializers.CharField()
    estimate = serializers.FloatField(allow_null=True)
    ci = IntervalField()
    n = serializers.IntegerField()
    p = serializers.FloatField(allow_null=True)
    post_holm_reject = serializers.BooleanField(allow_null=True)
    method = serializers.CharField()
    spec_tags = serializers.DictField()
    extra = serializers.JSONField()


class SpecificationCurveSerializer(serializers.Serializer):
    hypothesis = serializers.CharField()
    cells = serializers.SerializerMethodField()
    point = serializers.FloatField(allow_null=True)
    reject_fraction = serializers.FloatField()
    p10 = serializers.FloatField(allow_null=True)
    median = serializers.FloatField(allow_null=True)
    p90 = serializers.FloatField(allow_null=True)
    verdict = serializers.BooleanField(allow_null=True)
    axes = serializers.SerializerMethodField()

    def get_cells(self, curve):
        return len(curve.cells)

    def get_axes(self, curve):
        return {name: list(levels) for name, levels in curve.axes}


class CoverageTestSerializer(serializers.Serializer):
    family = serializers.CharField()
    cell = serializers.CharField()
    residual_share = serializers.FloatField(allow_null=True)
    corpus_share = serializers.FloatField(allow_null=True)
    shift_pp = serializers.FloatField(allow_null=True)
    statistic = serializers.FloatField(allow_null=True)
    p = serializers.FloatField()
    survives = serializers.BooleanField()
