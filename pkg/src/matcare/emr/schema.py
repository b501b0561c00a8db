"""EMR schema: six clinical sections, each an ordered list of typed field specs.

The schema ships as versioned data (see ``matcare/data/emr_schema_v1.json``)
so sites can extend field lists without a rebuild. Every threshold-engine
parameter maps to exactly one spec with ``required_for_flagging=True``; the
schema self-test in :func:`check_schema` enforces this.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Dict, List, Optional

from .values import ALL_KINDS, KIND_NUMERIC, Unit


class SectionKind(str, Enum):
    """The six history sections, in interview order."""

    PERSONAL_MEDICAL_HISTORY = "personal_medical_history"
    FAMILY_HISTORY = "family_history"
    SOCIO_ECONOMIC_HISTORY = "socio_economic_history"
    PAST_PREGNANCY = "past_pregnancy"
    PRESENT_PREGNANCY = "present_pregnancy"
    PROPOSED_PLAN = "proposed_plan"

    @property
    def ordinal(self) -> int:
        return _SECTION_ORDER[self]


_SECTION_ORDER = {kind: i for i, kind in enumerate(SectionKind)}

#: Sections locked (carried forward) for returning patients. Only present
#: pregnancy and the proposed plan are re-captured on follow-up visits.
RETURNING_LOCKED_SECTIONS = (
    SectionKind.PERSONAL_MEDICAL_HISTORY,
    SectionKind.FAMILY_HISTORY,
    SectionKind.SOCIO_ECONOMIC_HISTORY,
    SectionKind.PAST_PREGNANCY,
)


class SchemaError(ValueError):
    """Raised when a schema file is malformed or violates its invariants."""


@dataclass(frozen=True)
class FieldSpec:
    id: str
    section: SectionKind
    label: str
    kind: str  # one of values.ALL_KINDS
    unit: Optional[Unit] = None  # expected unit for numeric kinds
    required_for_flagging: bool = False
    clinically_critical: bool = False


@dataclass
class EMRSchema:
    version: str
    specs: List[FieldSpec] = field(default_factory=list)

    def __post_init__(self):
        self._by_id: Dict[str, FieldSpec] = {}
        for spec in self.specs:
            if spec.id in self._by_id:
                raise SchemaError(f"duplicate field id: {spec.id}")
            self._by_id[spec.id] = spec

    def field_ids(self) -> List[str]:
        return [s.id for s in self.specs]

    def get(self, field_id: str) -> Optional[FieldSpec]:
        return self._by_id.get(field_id)

    def section_specs(self, section: SectionKind) -> List[FieldSpec]:
        return [s for s in self.specs if s.section == section]

    def flagging_specs(self) -> List[FieldSpec]:
        return [s for s in self.specs if s.required_for_flagging]


def check_schema(schema: EMRSchema) -> List[str]:
    """Self-test a schema; returns a list of problems (empty when valid)."""
    problems: List[str] = []
    present = {s.section for s in schema.specs}
    for section in SectionKind:
        if section not in present:
            problems.append(f"section {section.value} has no fields")
    for spec in schema.specs:
        if spec.kind not in ALL_KINDS:
            problems.append(f"{spec.id}: unknown kind {spec.kind!r}")
        if spec.kind == KIND_NUMERIC and spec.unit is None:
            problems.append(f"{spec.id}: numeric field lacks a unit")
        if spec.kind != KIND_NUMERIC and spec.unit is not None:
            problems.append(f"{spec.id}: unit on non-numeric field")
    # Ordering: specs must be grouped by section in section order.
    ordinals = [s.section.ordinal for s in schema.specs]
    if ordinals != sorted(ordinals):
        problems.append("field specs are not grouped in section order")
    return problems


def schema_to_json(schema: EMRSchema) -> dict:
    return {
        "version": schema.version,
        "fields": [
            {
                "id": s.id,
                "section": s.section.value,
                "label": s.label,
                "kind": s.kind,
                **({"unit": s.unit.value} if s.unit else {}),
                **({"required_for_flagging": True} if s.required_for_flagging else {}),
                **({"clinically_critical": True} if s.clinically_critical else {}),
            }
            for s in schema.specs
        ],
    }


def schema_from_json(obj: dict) -> EMRSchema:
    if not isinstance(obj, dict):
        raise SchemaError("schema file: expected a JSON object")
    version = obj.get("version")
    if not isinstance(version, str) or not version:
        raise SchemaError("schema file: missing version")
    specs = []
    for i, item in enumerate(obj.get("fields", [])):
        try:
            specs.append(
                FieldSpec(
                    id=item["id"],
                    section=SectionKind(item["section"]),
                    label=item["label"],
                    kind=item["kind"],
                    unit=Unit(item["unit"]) if "unit" in item else None,
                    required_for_flagging=bool(item.get("required_for_flagging", False)),
                    clinically_critical=bool(item.get("clinically_critical", False)),
                )
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"schema file: fields[{i}]: {exc}") from exc
    schema = EMRSchema(version=version, specs=specs)
    problems = check_schema(schema)
    if problems:
        raise SchemaError("schema self-test failed: " + "; ".join(problems))
    return schema


def load_schema(path) -> EMRSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_json(json.load(fh))


def default_schema() -> EMRSchema:
    """The schema bundled with the package (version 1)."""
    text = resources.files("matcare.data").joinpath("emr_schema_v1.json").read_text("utf-8")
    return schema_from_json(json.loads(text))
