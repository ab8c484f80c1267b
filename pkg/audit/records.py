import calendar
from dataclasses import dataclass, field, replace
from datetime import date


class Choices(object):
    """base set of choices for audit record fields"""

    @classmethod
    def choices(cls):
        """defines available choices built using per-type values"""

    @classmethod
    def values(cls):
        """the stored values of every choice, in declaration order"""
        return tuple(value for value, _ in cls.choices())


class Scale(Choices):
    """a capability scale carried by the capability table"""
    ECI = 'eci'
    ARENA_ELO = 'arena_elo'
    AA_INDEX = 'aa_index'

    # short names accepted on the command line
    ALIASES = {
        'eci': ECI,
        'arena': ARENA_ELO,
        'arena_elo': ARENA_ELO,
        'aa': AA_INDEX,
        'aa_index': AA_INDEX,
    }

    @classmethod
    def choices(cls):
        """selectable choices for Scales"""
        return (
            (Scale.ECI, 'Epoch Capabilities Index'),
            (Scale.ARENA_ELO, 'Chatbot Arena Elo'),
            (Scale.AA_INDEX, 'Artificial Analysis intelligence index'),
        )

    @classmethod
    def parse(cls, value):
        """maps a scale name or command-line alias to its stored value"""
        try:
            return cls.ALIASES[str(value).strip().lower()]
        except KeyError:
            raise ValueError('unknown scale "{}"'.format(value))


class Domain(Choices):
    """applied domain a paper evaluates in"""
    MEDICINE = 'medicine'
    LAW = 'law'
    CODING = 'coding'
    EDUCATION = 'education'
    SCIENTIFIC_REASONING = 'scientific_reasoning'
    OTHER = 'other'

    @classmethod
    def choices(cls):
        """selectable choices for Domains"""
        return (
            (Domain.MEDICINE, 'Medicine'),
            (Domain.LAW, 'Law'),
            (Domain.CODING, 'Coding'),
            (Domain.EDUCATION, 'Education'),
            (Domain.SCIENTIFIC_REASONING, 'Scientific reasoning'),
            (Domain.OTHER, 'Other'),
        )


class Valence(Choices):
    """conclusion valence of a paper's abstract"""
    NEGATIVE = 'negative'
    MIXED = 'mixed'
    NEUTRAL = 'neutral'
    POSITIVE = 'positive'

    # numeric-linear collapse used by the valence-encoding sensitivity
    LINEAR = {
        NEGATIVE: 3.0,
        MIXED: 2.0,
        NEUTRAL: 1.0,
        POSITIVE: 0.0,
    }

    @classmethod
    def choices(cls):
        """selectable choices for Valences"""
        return (
            (Valence.NEGATIVE, 'Negative'),
            (Valence.MIXED, 'Mixed'),
            (Valence.NEUTRAL, 'Neutral'),
            (Valence.POSITIVE, 'Positive'),
        )


class Framing(Choices):
    """whether a conclusion speaks about AI in general or the tested model"""
    AI_GENERIC = 'ai_generic'
    MODEL_SPECIFIC = 'model_specific'

    @classmethod
    def choices(cls):
        """selectable choices for Framings"""
        return (
            (Framing.AI_GENERIC, 'AI-generic'),
            (Framing.MODEL_SPECIFIC, 'Model-specific'),
        )


class Disclosure(Choices):
    """disclosure status of a configuration field or checklist item"""
    DISCLOSED = 'disclosed'
    UNDISCLOSED = 'undisclosed'
    NOT_APPLICABLE = 'not_applicable'

    @classmethod
    def choices(cls):
        """selectable choices for Disclosure statuses"""
        return (
            (Disclosure.DISCLOSED, 'Disclosed'),
            (Disclosure.UNDISCLOSED, 'Undisclosed'),
            (Disclosure.NOT_APPLICABLE, 'Not applicable'),
        )


class DeclaredFrame(Choices):
    """capability frame a paper declares for its claims"""
    FRONTIER = 'frontier'
    DEPLOYMENT = 'deployment'
    TIER_SPECIFIC = 'tier_specific'

    @classmethod
    def choices(cls):
        """selectable choices for declared Frames"""
        return (
            (DeclaredFrame.FRONTIER, 'Frontier'),
            (DeclaredFrame.DEPLOYMENT, 'Deployment'),
            (DeclaredFrame.TIER_SPECIFIC, 'Tier-specific'),
        )


class InclusionOverride(Choices):
    """manual re-adjudication of a borderline inclusion decision"""
    INCLUDE = 'include'
    EXCLUDE = 'exclude'

    @classmethod
    def choices(cls):
        """selectable choices for inclusion Overrides"""
        return (
            (InclusionOverride.INCLUDE, 'Include'),
            (InclusionOverride.EXCLUDE, 'Exclude'),
        )


# eight configuration-reporting fields, in extraction order
CONFIG_FIELDS = (
    'reasoning_mode',
    'thinking_effort',
    'tool_use',
    'scaffolding',
    'multi_agent',
    'prompting_strategy',
    'access_method',
    'temperature',
)

# the six equally weighted components of the elicitation index
ELICITATION_COMPONENTS = CONFIG_FIELDS[:6]

# dates a disclosed eval date may not coincide with
PROXY_DATE_FIELDS = (
    'submission',
    'acceptance',
    'publication',
    'copyright',
    'training_cutoff',
    'model_release',
    'benchmark_publication',
    'dataset_collection',
    'prior_study',
)


@dataclass(frozen=True)
class ConfigField:
    """one configuration field as extracted: a status plus the stated value"""
    status: str
    value: str = None

    @property
    def is_disclosed(self):
        return self.status == Disclosure.DISCLOSED


@dataclass(frozen=True)
class PaperRecord:
    """one audited paper as delivered by the extraction pipeline"""
    doi: str
    publication_date: date
    journal: str
    domain: str
    primary_model_raw: str = ''
    primary_model: str = None
    models_evaluated: tuple = ()
    eval_date_disclosed: date = None
    # configuration fields absent from the mapping were not extracted
    config: dict = field(default_factory=dict)
    conclusion_valence: str = None
    conclusion_framing: str = None
    human_comparator: bool = None
    task_description: str = ''
    extraction_confidence: dict = field(default_factory=dict)
    declared_frame: str = None
    inclusion_override: str = None
    proxy_dates: dict = field(default_factory=dict)
    eval_date_rejected: str = None

    def __str__(self):
        return 'PaperRecord<{}>'.format(self.doi)

    def config_field(self, name):
        """the extracted ConfigField for name, or None when not extracted"""
        if name not in CONFIG_FIELDS:
            raise KeyError('unknown configuration field "{}"'.format(name))
        return self.config.get(name)

    def config_status(self, name):
        """disclosure status for name, or None when not extracted"""
        config_field = self.config_field(name)
        if config_field is None:
            return None
        return config_field.status

    @property
    def publication_year(self):
        """publication date as a decimal year"""
        return decimal_year(self.publication_date)

    @property
    def min_confidence(self):
        """lowest per-field extraction confidence, or None when none recorded"""
        if not self.extraction_confidence:
            return None
        return min(self.extraction_confidence.values())

    def with_validated_eval_date(self):
        """returns a copy whose disclosed eval date has passed the forbidden-proxy filter"""
        proxy = forbidden_proxy_match(self.eval_date_disclosed, self.publication_date, self.proxy_dates)
        if proxy is None:
            return self
        return replace(self, eval_date_disclosed=None, eval_date_rejected=proxy)


def forbidden_proxy_match(eval_date, publication_date, proxy_dates):
    """name of the proxy date a disclosed eval date coincides with, if any"""
    if eval_date is None:
        return None
    if eval_date == publication_date:
        return 'publication'
    for name in PROXY_DATE_FIELDS:
        proxy = (proxy_dates or {}).get(name)
        if proxy is not None and proxy == eval_date:
            return name
    return None


def decimal_year(value):
    """calendar date as year plus elapsed fraction of that year"""
    days_in_year = 366 if calendar.isleap(value.year) else 365
    return value.year + (value.timetuple().tm_yday - 1) / float(days_in_year)


def month_of(value):
    """the (year, month) pair a date falls in"""
    return value.year, value.month


def month_end(year, month):
    """last calendar day of a month"""
    return date(year, month, calendar.monthrange(year, month)[1])


def month_range(start, end):
    """every (year, month) from start to end inclusive"""
    year, month = start
    months = []
    while (year, month) <= end:
        months.append((year, month))
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return months


def format_month(month):
    return '{:04d}-{:02d}'.format(*month)


def parse_month(value):
    """parses a YYYY-MM string into a (year, month) pair"""
    try:
        year, month = str(value).strip().split('-')[:2]
        parsed = int(year), int(month)
    except ValueError:
        raise ValueError('"{}" is not a YYYY-MM month'.format(value))
    if not 1 <= parsed[1] <= 12:
        raise ValueError('"{}" is not a YYYY-MM month'.format(value))
    return parsed
