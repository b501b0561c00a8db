from .values import (
    Affirmed,
    Denied,
    NoInformation,
    Text,
    Numeric,
    Date,
    Ordinal,
    DipstickGrade,
    Unit,
    FieldValue,
    KIND_TRISTATE,
    KIND_TEXT,
    KIND_NUMERIC,
    KIND_DATE,
    KIND_ORDINAL,
    value_to_json,
    value_from_json,
    value_matches_kind,
    values_equal,
)
from .schema import (
    SectionKind,
    FieldSpec,
    EMRSchema,
    SchemaError,
    RETURNING_LOCKED_SECTIONS,
    check_schema,
    default_schema,
    load_schema,
    schema_from_json,
    schema_to_json,
)
from .document import (
    EMRDocument,
    FieldDiff,
    DocumentError,
    ValidationReport,
    Violation,
    VitalSigns,
    PROVENANCE_LLM,
    PROVENANCE_CLINICIAN,
    PROVENANCE_DETERMINISTIC,
    apply_edits,
    blank_document,
    diff_documents,
    document_from_json,
    document_to_json,
    documents_identical,
    parse,
    serialize,
    validate_document,
)

__all__ = [name for name in dir() if not name.startswith("_")]
