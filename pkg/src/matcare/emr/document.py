"""EMR documents: construction, validation, diffing, edits, and wire form.

The wire form is canonical JSON: keys follow schema order, serialization is
byte-deterministic, and ``parse(serialize(doc)) == doc`` for every valid
document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

from .schema import EMRSchema, SectionKind
from .values import (
    FieldValue,
    NoInformation,
    value_from_json,
    value_matches_kind,
    value_to_json,
    values_equal,
)

PROVENANCE_LLM = "llm-generated"
PROVENANCE_CLINICIAN = "clinician-edited"
PROVENANCE_DETERMINISTIC = "deterministic"
PROVENANCES = (PROVENANCE_LLM, PROVENANCE_CLINICIAN, PROVENANCE_DETERMINISTIC)


class DocumentError(ValueError):
    """Raised on operations that reject their input (unknown field, kind mismatch, ...)."""


@dataclass
class EMRDocument:
    schema_version: str
    values: Dict[str, FieldValue] = field(default_factory=dict)
    additional_info: Dict[SectionKind, str] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)

    def copy(self) -> "EMRDocument":
        return EMRDocument(
            schema_version=self.schema_version,
            values=dict(self.values),
            additional_info=dict(self.additional_info),
            provenance=dict(self.provenance),
        )


@dataclass(frozen=True)
class Violation:
    field_id: str
    message: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class FieldDiff:
    field_id: str
    system_value: FieldValue
    truth_value: FieldValue
    equal: bool


@dataclass(frozen=True)
class VitalSigns:
    """Nurse-entered vitals. All values optional; present values validated."""

    height_cm: Optional[float] = None
    weight_kg: Optional[float] = None
    systolic_mmHg: Optional[float] = None
    diastolic_mmHg: Optional[float] = None
    temperature_C: Optional[float] = None
    pulse_bpm: Optional[float] = None

    def problems(self) -> List[str]:
        out = []
        for name in ("height_cm", "weight_kg", "systolic_mmHg", "diastolic_mmHg",
                     "temperature_C", "pulse_bpm"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                out.append(f"{name} must be strictly positive")
        if (
            self.systolic_mmHg is not None
            and self.diastolic_mmHg is not None
            and self.systolic_mmHg <= self.diastolic_mmHg
        ):
            out.append("systolic must exceed diastolic")
        return out

    def missing_names(self) -> List[str]:
        return [
            name
            for name in ("height_cm", "weight_kg", "systolic_mmHg", "diastolic_mmHg",
                         "temperature_C", "pulse_bpm")
            if getattr(self, name) is None
        ]

    def to_json(self) -> dict:
        return {
            k: getattr(self, k)
            for k in ("height_cm", "weight_kg", "systolic_mmHg", "diastolic_mmHg",
                      "temperature_C", "pulse_bpm")
            if getattr(self, k) is not None
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VitalSigns":
        return cls(**{k: obj[k] for k in obj})


def blank_document(schema: EMRSchema) -> EMRDocument:
    """A document with every field NoInformation and empty section notes."""
    return EMRDocument(
        schema_version=schema.version,
        values={fid: NoInformation() for fid in schema.field_ids()},
        additional_info={section: "" for section in SectionKind},
        provenance={},
    )


def validate_document(doc: EMRDocument, schema: EMRSchema) -> ValidationReport:
    report = ValidationReport()
    if doc.schema_version != schema.version:
        report.violations.append(
            Violation("", f"schema version mismatch: document {doc.schema_version!r}, "
                          f"schema {schema.version!r}")
        )
    for spec in schema.specs:
        if spec.id not in doc.values:
            report.violations.append(Violation(spec.id, "missing field"))
            continue
        value = doc.values[spec.id]
        if not value_matches_kind(value, spec.kind):
            report.violations.append(
                Violation(spec.id, f"value {type(value).__name__} does not match kind {spec.kind!r}")
            )
            continue
        if not isinstance(value, NoInformation) and spec.id not in doc.provenance:
            report.violations.append(Violation(spec.id, "populated field lacks provenance"))
        elif spec.id in doc.provenance and doc.provenance[spec.id] not in PROVENANCES:
            report.violations.append(
                Violation(spec.id, f"unknown provenance tag {doc.provenance[spec.id]!r}")
            )
    known = set(schema.field_ids())
    for fid in doc.values:
        if fid not in known:
            report.violations.append(Violation(fid, "field not in schema"))
    for section in SectionKind:
        if section not in doc.additional_info:
            report.violations.append(
                Violation("", f"missing additional_info slot for section {section.value}")
            )
    return report


def diff_documents(system: EMRDocument, truth: EMRDocument, schema: EMRSchema) -> List[FieldDiff]:
    """One FieldDiff per schema field, in schema order."""
    if system.schema_version != truth.schema_version:
        raise DocumentError(
            f"cannot diff documents of different schema versions: "
            f"{system.schema_version!r} vs {truth.schema_version!r}"
        )
    diffs = []
    for spec in schema.specs:
        sv = system.values.get(spec.id, NoInformation())
        tv = truth.values.get(spec.id, NoInformation())
        diffs.append(FieldDiff(spec.id, sv, tv, values_equal(sv, tv)))
    return diffs


def apply_edits(
    doc: EMRDocument,
    edits: Iterable[Tuple[str, FieldValue]],
    schema: EMRSchema,
) -> EMRDocument:
    """Apply clinician edits; last write wins, edited fields tagged clinician-edited."""
    out = doc.copy()
    for field_id, value in edits:
        spec = schema.get(field_id)
        if spec is None:
            raise DocumentError(f"unknown field id: {field_id}")
        if not value_matches_kind(value, spec.kind):
            raise DocumentError(
                f"{field_id}: value {type(value).__name__} does not match kind {spec.kind!r}"
            )
        out.values[field_id] = value
        if isinstance(value, NoInformation):
            out.provenance.pop(field_id, None)
        else:
            out.provenance[field_id] = PROVENANCE_CLINICIAN
    return out


def document_to_json(doc: EMRDocument, schema: EMRSchema) -> dict:
    """JSON object with deterministic key order (schema order)."""
    sections = []
    for section in SectionKind:
        fields_out = []
        for spec in schema.section_specs(section):
            value = doc.values.get(spec.id, NoInformation())
            entry = {"id": spec.id, "value": value_to_json(value)}
            if spec.id in doc.provenance:
                entry["provenance"] = doc.provenance[spec.id]
            fields_out.append(entry)
        sections.append(
            {
                "section": section.value,
                "fields": fields_out,
                "additional_information": doc.additional_info.get(section, ""),
            }
        )
    return {"schema_version": doc.schema_version, "sections": sections}


def serialize(doc: EMRDocument, schema: EMRSchema) -> str:
    """Canonical UTF-8 wire form; byte-identical for equal documents."""
    return json.dumps(document_to_json(doc, schema), ensure_ascii=False,
                      separators=(",", ":")) + "\n"


def parse(text: str, schema: EMRSchema) -> EMRDocument:
    """Parse the wire form, reporting the first offending path on bad input."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"document text is not well-formed JSON: {exc}") from exc
    return document_from_json(obj, schema)


def document_from_json(obj: dict, schema: EMRSchema) -> EMRDocument:
    if not isinstance(obj, dict):
        raise DocumentError("document: expected a JSON object")
    version = obj.get("schema_version")
    if not isinstance(version, str):
        raise DocumentError("document.schema_version: missing or not a string")
    doc = EMRDocument(schema_version=version,
                      additional_info={section: "" for section in SectionKind})
    sections = obj.get("sections")
    if not isinstance(sections, list):
        raise DocumentError("document.sections: missing or not a list")
    for i, sec in enumerate(sections):
        path = f"sections[{i}]"
        if not isinstance(sec, dict) or "section" not in sec:
            raise DocumentError(f"{path}: incomplete section (missing 'section' key)")
        try:
            section = SectionKind(sec["section"])
        except ValueError as exc:
            raise DocumentError(f"{path}.section: {exc}") from exc
        doc.additional_info[section] = sec.get("additional_information", "")
        fields_in = sec.get("fields")
        if not isinstance(fields_in, list):
            raise DocumentError(f"{path}.fields: incomplete section {section.value} "
                                "(missing field list)")
        for j, entry in enumerate(fields_in):
            fpath = f"{path}.fields[{j}]"
            if not isinstance(entry, dict) or "id" not in entry or "value" not in entry:
                raise DocumentError(f"{fpath}: entry must carry 'id' and 'value'")
            fid = entry["id"]
            if schema.get(fid) is None:
                raise DocumentError(f"{fpath}.id: unknown field {fid!r}")
            doc.values[fid] = value_from_json(entry["value"], path=f"{fpath}.value")
            if "provenance" in entry:
                doc.provenance[fid] = entry["provenance"]
    return doc


def documents_identical(a: EMRDocument, b: EMRDocument, schema: EMRSchema) -> bool:
    return serialize(a, schema) == serialize(b, schema)
