from .accuracy import FieldAccuracyResult, SectionAccuracy, field_accuracy
from .categorize import (
    CATEGORIES,
    CategorizationError,
    CategoryLabel,
    EASILY_CORRECTABLE,
    ErrorCategoryTally,
    NO_ACTION_NEEDED,
    UNIDENTIFIABLE,
    record_categorization,
)
from .corpus import CorpusBundleError, PatientBundle, load_bundle, load_corpus
from .crossmodel import (
    BackendRow,
    CrossModelError,
    CrossModelReport,
    cross_model_report,
)
from .ratings import (
    FlagRating,
    RatingAggregate,
    RatingError,
    RedFlagRatingReport,
    rate_redflags,
)
from .wer import NormalizationOptions, WERResult, WerError, align_counts, wer

__all__ = [
    "BackendRow",
    "CATEGORIES",
    "CategorizationError",
    "CategoryLabel",
    "CorpusBundleError",
    "CrossModelError",
    "CrossModelReport",
    "EASILY_CORRECTABLE",
    "ErrorCategoryTally",
    "FieldAccuracyResult",
    "FlagRating",
    "NO_ACTION_NEEDED",
    "NormalizationOptions",
    "PatientBundle",
    "RatingAggregate",
    "RatingError",
    "RedFlagRatingReport",
    "SectionAccuracy",
    "UNIDENTIFIABLE",
    "WERResult",
    "WerError",
    "align_counts",
    "cross_model_report",
    "field_accuracy",
    "load_bundle",
    "load_corpus",
    "rate_redflags",
    "record_categorization",
    "wer",
]
