"""Cross-backend comparison of EMR field-level accuracy.

Takes one accuracy result per patient per backend and produces a
per-section and overall comparison table, ordered by backend id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..emr.schema import SectionKind
from .accuracy import FieldAccuracyResult


class CrossModelError(ValueError):
    """Runs do not cover the same patient set."""


@dataclass(frozen=True)
class BackendRow:
    backend_id: str
    per_section: Dict[SectionKind, float]
    overall: float


@dataclass
class CrossModelReport:
    rows: List[BackendRow] = field(default_factory=list)
    patients: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "patients": list(self.patients),
            "rows": [
                {"backend_id": r.backend_id,
                 "per_section": {s.value: r.per_section[s]
                                 for s in SectionKind if s in r.per_section},
                 "overall": r.overall}
                for r in self.rows
            ],
        }

    def render_table(self) -> str:
        sections = [s for s in SectionKind
                    if any(s in r.per_section for r in self.rows)]
        header = ["backend"] + [s.value for s in sections] + ["overall"]
        lines = ["\t".join(header)]
        for row in self.rows:
            cells = [row.backend_id]
            cells += [f"{row.per_section[s] * 100:.1f}%" if s in row.per_section
                      else "-" for s in sections]
            cells.append(f"{row.overall * 100:.1f}%")
            lines.append("\t".join(cells))
        return "\n".join(lines)


def cross_model_report(
    runs: Sequence[Tuple[str, Dict[str, FieldAccuracyResult]]],
) -> CrossModelReport:
    """``runs``: (backend_id, {patient_id: accuracy result}) pairs."""
    if not runs:
        return CrossModelReport()
    patient_sets = [frozenset(per_patient) for _, per_patient in runs]
    if len(set(patient_sets)) != 1:
        raise CrossModelError("all runs must cover the same patient set")
    patients = sorted(patient_sets[0])
    rows = []
    for backend_id, per_patient in sorted(runs, key=lambda r: r[0]):
        section_correct: Dict[SectionKind, int] = {}
        section_total: Dict[SectionKind, int] = {}
        correct = total = 0
        for patient in patients:
            result = per_patient[patient]
            correct += result.correct
            total += result.total
            for section, acc in result.per_section.items():
                section_correct[section] = \
                    section_correct.get(section, 0) + acc.correct
                section_total[section] = \
                    section_total.get(section, 0) + acc.total
        rows.append(BackendRow(
            backend_id=backend_id,
            per_section={s: section_correct[s] / section_total[s]
                         for s in section_total},
            overall=correct / total if total else 1.0,
        ))
    return CrossModelReport(rows=rows, patients=patients)
