"""Bookkeeping for clinician categorization of EMR filling errors.

Every mismatching field can be labeled with one of three severity
categories; the tally reports counts and a percentage view over the total
field population.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from ..emr.document import FieldDiff

NO_ACTION_NEEDED = "no_action_needed"
EASILY_CORRECTABLE = "easily_identifiable_and_correctable"
UNIDENTIFIABLE = "unidentifiable_without_ground_truth"
CATEGORIES = (NO_ACTION_NEEDED, EASILY_CORRECTABLE, UNIDENTIFIABLE)


class CategorizationError(ValueError):
    """Label rejected: unknown category or field, or field not in error."""


@dataclass(frozen=True)
class CategoryLabel:
    field_id: str
    category: str
    annotator: str


@dataclass
class ErrorCategoryTally:
    counts: Dict[str, int] = field(default_factory=dict)
    labels: List[CategoryLabel] = field(default_factory=list)
    total_fields: int = 0

    def percentage(self, category: str) -> float:
        if category not in CATEGORIES:
            raise CategorizationError(f"unknown category {category!r}")
        if not self.total_fields:
            return 0.0
        return self.counts.get(category, 0) / self.total_fields * 100.0

    def to_json(self) -> dict:
        return {
            "counts": {c: self.counts.get(c, 0) for c in CATEGORIES},
            "percentages": {c: self.percentage(c) for c in CATEGORIES},
            "total_fields": self.total_fields,
            "labels": [{"field_id": l.field_id, "category": l.category,
                        "annotator": l.annotator} for l in self.labels],
        }


def record_categorization(
    diffs: Sequence[FieldDiff],
    labels: Sequence[Tuple[str, str, str]],  # (field_id, category, annotator)
) -> ErrorCategoryTally:
    unequal = {d.field_id for d in diffs if not d.equal}
    tally = ErrorCategoryTally(total_fields=len(diffs))
    for field_id, category, annotator in labels:
        if category not in CATEGORIES:
            raise CategorizationError(f"unknown category {category!r}")
        if field_id not in unequal:
            raise CategorizationError(
                f"field {field_id!r} is not a mismatch; only erroneous "
                "fields can be categorized")
        tally.counts[category] = tally.counts.get(category, 0) + 1
        tally.labels.append(CategoryLabel(field_id, category, annotator))
    return tally
