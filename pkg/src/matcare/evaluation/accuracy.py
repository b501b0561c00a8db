"""Field-level EMR accuracy: correctly filled fields over total fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

from ..emr.document import EMRDocument, DocumentError, diff_documents
from ..emr.schema import EMRSchema, SectionKind


@dataclass(frozen=True)
class SectionAccuracy:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 1.0


@dataclass
class FieldAccuracyResult:
    correct: int
    total: int
    per_section: Dict[SectionKind, SectionAccuracy] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 1.0

    def to_json(self) -> dict:
        return {
            "correct": self.correct,
            "total": self.total,
            "accuracy": self.accuracy,
            "per_section": {
                s.value: {"correct": a.correct, "total": a.total,
                          "accuracy": a.accuracy}
                for s, a in self.per_section.items()
            },
        }


def field_accuracy(system: EMRDocument, truth: EMRDocument,
                   schema: EMRSchema) -> FieldAccuracyResult:
    if system.schema_version != truth.schema_version:
        raise DocumentError(
            f"schema mismatch: {system.schema_version} vs "
            f"{truth.schema_version}")
    diffs = diff_documents(system, truth, schema)
    by_field = {d.field_id: d for d in diffs}
    section_correct: Dict[SectionKind, int] = {s: 0 for s in SectionKind}
    section_total: Dict[SectionKind, int] = {s: 0 for s in SectionKind}
    for spec in schema.specs:
        section_total[spec.section] += 1
        if by_field[spec.id].equal:
            section_correct[spec.section] += 1
    per_section = {
        s: SectionAccuracy(section_correct[s], section_total[s])
        for s in SectionKind if section_total[s]
    }
    return FieldAccuracyResult(
        correct=sum(section_correct.values()),
        total=sum(section_total.values()),
        per_section=per_section,
    )
