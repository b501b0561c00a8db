"""Aggregation of clinician ratings of generated red flags.

Each rating marks one flag as medically accurate and/or patient-relevant.
Aggregates are simple means over rated flags, per rater and pooled; flags
nobody rated are reported separately rather than counted as failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from ..rules import RedFlag


class RatingError(ValueError):
    """Rating references a flag that does not exist."""


@dataclass(frozen=True)
class FlagRating:
    flag_id: str  # rule_id of the rated flag
    rater: str
    medically_accurate: bool
    patient_relevant: bool


@dataclass(frozen=True)
class RatingAggregate:
    rated: int
    accuracy_percent: Optional[float]
    relevance_percent: Optional[float]

    def to_json(self) -> dict:
        return {
            "rated": self.rated,
            "accuracy_percent": self.accuracy_percent,
            "relevance_percent": self.relevance_percent,
        }


@dataclass
class RedFlagRatingReport:
    pooled: RatingAggregate
    per_rater: Dict[str, RatingAggregate] = field(default_factory=dict)
    unrated_flag_ids: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pooled": self.pooled.to_json(),
            "per_rater": {r: a.to_json() for r, a in self.per_rater.items()},
            "unrated_flag_ids": list(self.unrated_flag_ids),
        }


def _aggregate(ratings: Sequence[FlagRating]) -> RatingAggregate:
    if not ratings:
        return RatingAggregate(rated=0, accuracy_percent=None,
                               relevance_percent=None)
    n = len(ratings)
    acc = sum(1 for r in ratings if r.medically_accurate) / n * 100.0
    rel = sum(1 for r in ratings if r.patient_relevant) / n * 100.0
    return RatingAggregate(rated=n, accuracy_percent=acc,
                           relevance_percent=rel)


def rate_redflags(flags: Sequence[RedFlag],
                  ratings: Sequence[FlagRating]) -> RedFlagRatingReport:
    known = {f.rule_id for f in flags}
    for rating in ratings:
        if rating.flag_id not in known:
            raise RatingError(f"rating references unknown flag "
                              f"{rating.flag_id!r}")
    by_rater: Dict[str, List[FlagRating]] = {}
    for rating in ratings:
        by_rater.setdefault(rating.rater, []).append(rating)
    rated_ids = {r.flag_id for r in ratings}
    return RedFlagRatingReport(
        pooled=_aggregate(list(ratings)),
        per_rater={rater: _aggregate(rs)
                   for rater, rs in sorted(by_rater.items())},
        unrated_flag_ids=sorted(known - rated_ids),
    )
