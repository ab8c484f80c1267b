class AuditError(Exception):
    """base exception for every audit-engine failure"""


# capability table

class TableParseError(AuditError):
    """exception thrown when a capability-table row cannot be parsed"""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = 'row {}: {}'.format(row, message)
        super(TableParseError, self).__init__(message)


class TableIntegrityError(AuditError):
    """exception thrown when a capability table does not match its expected digest"""


class DuplicateKeyError(TableParseError):
    """exception thrown when two capability-table rows share a canonical_key"""


class UnknownKeyError(AuditError, KeyError):
    """exception thrown when a canonical_key is not present in the table"""

    def __str__(self):
        return Exception.__str__(self)


class MissingScoreError(AuditError):
    """exception thrown when a model carries no score on the requested scale"""


class NoSiblingError(MissingScoreError):
    """exception thrown when sibling imputation finds no qualifying sibling"""


# frontier / gaps

class EmptyFrontierError(AuditError):
    """exception thrown when no scored model is available at the requested date"""


class NoPricedBaseError(AuditError):
    """exception thrown when the deployment frontier has no priced base-tier model"""


class UnresolvedModelError(AuditError):
    """exception thrown when a paper's primary model cannot be resolved"""


class UnknownDomainError(AuditError, KeyError):
    """exception thrown when a domain has no configured lag median"""

    def __str__(self):
        return Exception.__str__(self)


# failure classifier

class EmptyDenominatorError(AuditError):
    """exception thrown when a rate is requested over an empty denominator"""


# statistics

class AllZerosError(AuditError):
    """exception thrown when every difference is zero after zero-discard"""


class DegenerateTableError(AuditError):
    """exception thrown when a proportion test or contingency table has no variance"""


class RankDeficientError(AuditError):
    """exception thrown when a regression design matrix is not of full column rank"""


class SeparationError(AuditError):
    """exception thrown when a logistic fit diverges or the outcome is constant"""


class ZeroVarianceError(AuditError):
    """exception thrown when a correlation input has no variance"""


class DegenerateAgreementError(AuditError):
    """exception thrown when chance agreement is total and kappa is undefined"""


# inference

class TooFewClustersError(AuditError):
    """exception thrown when a cluster bootstrap lacks journals or years"""


class MissingClassError(AuditError):
    """exception thrown when a contrast class is absent from the data"""


class DegenerateConfusionError(AuditError):
    """exception thrown when a confusion matrix cannot support a Bayes correction"""


class ProductTooLargeError(AuditError):
    """exception thrown when a specification grid exceeds the configured cell cap"""


# waterfall / checklist

class NonPositiveBeforeError(AuditError):
    """exception thrown when a retained fraction is requested from a non-positive score"""


class ChipFileError(AuditError):
    """exception thrown when a waterfall chip file row fails validation"""


class MissingFieldsError(AuditError):
    """exception thrown when a checklist rule needs fields the assessment lacks"""


class ChecklistFileError(AuditError):
    """exception thrown when a checklist assessment file fails validation"""


# corpus / metadata

class CorpusHeaderError(AuditError):
    """exception thrown when a corpus file has no readable schema header"""


class SchemaVersionMismatchError(CorpusHeaderError):
    """exception thrown when a corpus header declares an unsupported schema version"""


class InvalidDoiError(AuditError):
    """exception thrown when a DOI is not of the form 10.<registrant>/<suffix>"""


class MetadataNotFoundError(AuditError):
    """exception thrown when no metadata source knows the requested DOI"""


class MetadataTransportError(AuditError):
    """exception thrown when metadata sources fail after bounded retries"""


class RecordFileError(AuditError):
    """exception thrown when a single-record JSON file fails validation"""
