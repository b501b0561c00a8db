"""Field value types for EMR documents.

Clinical fields are tri-state rather than boolean: a parameter can be
affirmed, denied, or simply never mentioned. The distinction matters
because "Not mentioned" written where the clinician meant "No" is itself
an error class in the evaluation harness.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union


class Unit(str, Enum):
    """Closed set of measurement units carried by numeric field values."""

    KG = "kg"
    CM = "cm"
    MMHG = "mmHg"
    G_DL = "g/dL"
    MG_DL = "mg/dL"
    PERCENT = "percent"
    WEEKS = "weeks"
    YEARS = "years"
    KG_M2 = "kg/m2"


class DipstickGrade(str, Enum):
    """Ordinal urinalysis result scale, lowest to highest."""

    NEGATIVE = "negative"
    TRACE = "trace"
    PLUS1 = "plus1"
    PLUS2 = "plus2"
    PLUS3 = "plus3"
    PLUS4 = "plus4"

    @property
    def rank(self) -> int:
        return _GRADE_ORDER[self]

    def __ge__(self, other):  # type: ignore[override]
        if isinstance(other, DipstickGrade):
            return self.rank >= other.rank
        return NotImplemented

    def __gt__(self, other):  # type: ignore[override]
        if isinstance(other, DipstickGrade):
            return self.rank > other.rank
        return NotImplemented

    def __le__(self, other):  # type: ignore[override]
        if isinstance(other, DipstickGrade):
            return self.rank <= other.rank
        return NotImplemented

    def __lt__(self, other):  # type: ignore[override]
        if isinstance(other, DipstickGrade):
            return self.rank < other.rank
        return NotImplemented


_GRADE_ORDER = {
    DipstickGrade.NEGATIVE: 0,
    DipstickGrade.TRACE: 1,
    DipstickGrade.PLUS1: 2,
    DipstickGrade.PLUS2: 3,
    DipstickGrade.PLUS3: 4,
    DipstickGrade.PLUS4: 5,
}


def _canon_text(text: str) -> str:
    """Canonical form used for equality: case-fold and trim. No fuzzy match."""
    return text.strip().casefold()


@dataclass(frozen=True)
class Affirmed:
    """A 'Yes' answer, optionally with detail text."""

    detail: Optional[str] = None

    def canonical_key(self):
        return ("affirmed", _canon_text(self.detail) if self.detail else "")


@dataclass(frozen=True)
class Denied:
    """An explicit 'No'."""

    def canonical_key(self):
        return ("denied",)


@dataclass(frozen=True)
class NoInformation:
    """The field was never mentioned or was explicitly marked 'No Info'."""

    def canonical_key(self):
        return ("no_information",)


@dataclass(frozen=True)
class Text:
    value: str

    def canonical_key(self):
        return ("text", _canon_text(self.value))


@dataclass(frozen=True)
class Numeric:
    value: float
    unit: Unit

    def canonical_key(self):
        return ("numeric", self.value, self.unit.value)


@dataclass(frozen=True)
class Date:
    value: _dt.date

    def canonical_key(self):
        return ("date", self.value.isoformat())


@dataclass(frozen=True)
class Ordinal:
    grade: DipstickGrade

    def canonical_key(self):
        return ("ordinal", self.grade.value)


FieldValue = Union[Affirmed, Denied, NoInformation, Text, Numeric, Date, Ordinal]

#: FieldSpec.kind names and the value classes each accepts.
#: NoInformation is accepted by every kind.
KIND_TRISTATE = "tristate"
KIND_TEXT = "text"
KIND_NUMERIC = "numeric"
KIND_DATE = "date"
KIND_ORDINAL = "ordinal"

_KIND_CLASSES = {
    KIND_TRISTATE: (Affirmed, Denied),
    KIND_TEXT: (Text,),
    KIND_NUMERIC: (Numeric,),
    KIND_DATE: (Date,),
    KIND_ORDINAL: (Ordinal,),
}

ALL_KINDS = tuple(_KIND_CLASSES)


def value_matches_kind(value: FieldValue, kind: str) -> bool:
    if isinstance(value, NoInformation):
        return True
    classes = _KIND_CLASSES.get(kind)
    if classes is None:
        raise ValueError(f"unknown field kind: {kind!r}")
    return isinstance(value, classes)


def values_equal(a: FieldValue, b: FieldValue) -> bool:
    """Equality after canonical normalization (case-fold, trim)."""
    return a.canonical_key() == b.canonical_key()


def value_to_json(value: FieldValue) -> dict:
    if isinstance(value, Affirmed):
        out = {"type": "affirmed"}
        if value.detail is not None:
            out["detail"] = value.detail
        return out
    if isinstance(value, Denied):
        return {"type": "denied"}
    if isinstance(value, NoInformation):
        return {"type": "no_information"}
    if isinstance(value, Text):
        return {"type": "text", "value": value.value}
    if isinstance(value, Numeric):
        return {"type": "numeric", "value": value.value, "unit": value.unit.value}
    if isinstance(value, Date):
        return {"type": "date", "value": value.value.isoformat()}
    if isinstance(value, Ordinal):
        return {"type": "ordinal", "grade": value.grade.value}
    raise TypeError(f"not a FieldValue: {value!r}")


def value_from_json(obj: dict, path: str = "value") -> FieldValue:
    """Parse a JSON object back into a FieldValue.

    Raises ValueError naming the offending path on malformed input.
    """
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"{path}: expected an object with a 'type' key")
    kind = obj["type"]
    try:
        if kind == "affirmed":
            detail = obj.get("detail")
            if detail is not None and not isinstance(detail, str):
                raise ValueError(f"{path}.detail: expected string")
            return Affirmed(detail=detail)
        if kind == "denied":
            return Denied()
        if kind == "no_information":
            return NoInformation()
        if kind == "text":
            if not isinstance(obj.get("value"), str):
                raise ValueError(f"{path}.value: expected string")
            return Text(obj["value"])
        if kind == "numeric":
            if not isinstance(obj.get("value"), (int, float)) or isinstance(obj.get("value"), bool):
                raise ValueError(f"{path}.value: expected number")
            return Numeric(float(obj["value"]), Unit(obj["unit"]))
        if kind == "date":
            return Date(_dt.date.fromisoformat(obj["value"]))
        if kind == "ordinal":
            return Ordinal(DipstickGrade(obj["grade"]))
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ValueError) and str(exc).startswith(path):
            raise
        raise ValueError(f"{path}: malformed {kind} value ({exc})") from exc
    raise ValueError(f"{path}.type: unknown value type {kind!r}")
