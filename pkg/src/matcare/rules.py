"""Deterministic obstetric calculators and the red-flag threshold engine.

These rules never consult a model backend: identical inputs always produce
identical flags. Narrative candidates from the language model are merged
behind them, never ahead of them.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal, ROUND_HALF_UP
from importlib import resources
from typing import Dict, List, Optional

from .emr.document import EMRDocument, VitalSigns
from .emr.schema import EMRSchema
from .emr.values import DipstickGrade, NoInformation, Numeric, Ordinal

CATEGORY_CRITICAL = "critical"
CATEGORY_MISSING = "missing"

SOURCE_DETERMINISTIC = "deterministic"
SOURCE_LLM = "llm"
SOURCE_MERGED = "merged"

SEVERITY_RED = "red"
SEVERITY_YELLOW = "yellow"


class RuleError(ValueError):
    """Invalid calculator input (implausible height, future LMP, ...)."""


@dataclass(frozen=True)
class ThresholdRuleSet:
    """Red-flag thresholds. Defaults are the deployed clinical values.

    Comparators are fixed per parameter: strict > for blood pressure and
    BMI, strict < for hemoglobin, >= for glucose measures and dipsticks.
    The blood-pressure rule triggers on either component (OR), standard
    hypertension screening practice; set bp_require_both for AND semantics.
    """

    version: str = "1"
    bp_systolic_gt: float = 140.0
    bp_diastolic_gt: float = 90.0
    bp_require_both: bool = False
    bmi_gt: float = 30.0
    hb_lt: float = 11.0
    rbg_ge: float = 160.0
    hba1c_ge: float = 7.0
    dipstick_albumin_ge: DipstickGrade = DipstickGrade.PLUS1
    dipstick_glucose_ge: DipstickGrade = DipstickGrade.PLUS2

    def __post_init__(self):
        for name in ("bp_systolic_gt", "bp_diastolic_gt", "bmi_gt", "hb_lt",
                     "rbg_ge", "hba1c_ge"):
            if getattr(self, name) <= 0:
                raise RuleError(f"threshold {name} must be strictly positive")

    @classmethod
    def from_json(cls, obj: dict) -> "ThresholdRuleSet":
        kwargs = dict(obj)
        for key in ("dipstick_albumin_ge", "dipstick_glucose_ge"):
            if key in kwargs:
                kwargs[key] = DipstickGrade(kwargs[key])
        return cls(**kwargs)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "bp_systolic_gt": self.bp_systolic_gt,
            "bp_diastolic_gt": self.bp_diastolic_gt,
            "bp_require_both": self.bp_require_both,
            "bmi_gt": self.bmi_gt,
            "hb_lt": self.hb_lt,
            "rbg_ge": self.rbg_ge,
            "hba1c_ge": self.hba1c_ge,
            "dipstick_albumin_ge": self.dipstick_albumin_ge.value,
            "dipstick_glucose_ge": self.dipstick_glucose_ge.value,
        }


def default_rules() -> ThresholdRuleSet:
    text = resources.files("matcare.data").joinpath("thresholds_v1.json").read_text("utf-8")
    return ThresholdRuleSet.from_json(json.loads(text))


@dataclass(frozen=True)
class RedFlag:
    category: str  # critical | missing
    rule_id: str
    title: str
    detail: str
    source: str = SOURCE_DETERMINISTIC
    snippet_ids: tuple = ()

    @property
    def severity_display(self) -> str:
        return SEVERITY_RED if self.category == CATEGORY_CRITICAL else SEVERITY_YELLOW

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "rule_id": self.rule_id,
            "title": self.title,
            "detail": self.detail,
            "source": self.source,
            "severity_display": self.severity_display,
            "snippet_ids": list(self.snippet_ids),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RedFlag":
        return cls(
            category=obj["category"],
            rule_id=obj["rule_id"],
            title=obj["title"],
            detail=obj["detail"],
            source=obj.get("source", SOURCE_DETERMINISTIC),
            snippet_ids=tuple(obj.get("snippet_ids", [])),
        )


@dataclass
class RedFlagReport:
    flags: List[RedFlag] = field(default_factory=list)
    doc_ref: str = ""
    rules_version: str = ""

    def critical_flags(self) -> List[RedFlag]:
        return [f for f in self.flags if f.category == CATEGORY_CRITICAL]

    def to_json(self) -> dict:
        return {
            "doc_ref": self.doc_ref,
            "rules_version": self.rules_version,
            "flags": [f.to_json() for f in self.flags],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RedFlagReport":
        return cls(
            flags=[RedFlag.from_json(f) for f in obj.get("flags", [])],
            doc_ref=obj.get("doc_ref", ""),
            rules_version=obj.get("rules_version", ""),
        )


@dataclass(frozen=True)
class GestationResult:
    weeks: int
    days: int  # 0-6
    edd: _dt.date
    implausible: bool = False  # more than 320 days since LMP


def compute_bmi(weight_kg: float, height_cm: float) -> float:
    """BMI in kg/m², rounded half-up to one decimal."""
    if weight_kg <= 0:
        raise RuleError("weight must be strictly positive")
    if not (50.0 <= height_cm <= 250.0):
        raise RuleError(f"implausible height: {height_cm} cm (expected 50-250)")
    height_m = height_cm / 100.0
    bmi = Decimal(str(weight_kg / (height_m * height_m)))
    return float(bmi.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def gestation(lmp: _dt.date, on: _dt.date) -> GestationResult:
    """Completed weeks+days since LMP; EDD is LMP + 280 days."""
    if lmp > on:
        raise RuleError(f"LMP {lmp.isoformat()} is after the reference date {on.isoformat()}")
    delta = (on - lmp).days
    return GestationResult(
        weeks=delta // 7,
        days=delta % 7,
        edd=lmp + _dt.timedelta(days=280),
        implausible=delta > 320,
    )


def evaluate_thresholds(
    vitals: Optional[VitalSigns],
    labs: Optional[Dict[str, object]],
    bmi: Optional[float],
    rules: ThresholdRuleSet,
) -> List[RedFlag]:
    """Critical flags from measured values. Absent measurements flag nothing.

    ``labs`` keys: hemoglobin_g_dl, random_blood_glucose_mg_dl, hba1c_percent
    (numbers), urine_albumin, urine_glucose (DipstickGrade).
    """
    labs = labs or {}
    flags: List[RedFlag] = []

    systolic = vitals.systolic_mmHg if vitals else None
    diastolic = vitals.diastolic_mmHg if vitals else None
    sys_high = systolic is not None and systolic > rules.bp_systolic_gt
    dia_high = diastolic is not None and diastolic > rules.bp_diastolic_gt
    bp_triggered = (sys_high and dia_high) if rules.bp_require_both else (sys_high or dia_high)
    if bp_triggered:
        reading = f"{_fmt(systolic)}/{_fmt(diastolic)} mmHg"
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "hypertension",
            "Elevated blood pressure",
            f"Blood pressure {reading} exceeds "
            f"{_fmt(rules.bp_systolic_gt)}/{_fmt(rules.bp_diastolic_gt)} mmHg.",
        ))
    if bmi is not None and bmi > rules.bmi_gt:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "obesity",
            "BMI above threshold",
            f"BMI is {bmi:.1f} kg/m2, above {_fmt(rules.bmi_gt)} kg/m2, indicating obesity.",
        ))
    hb = labs.get("hemoglobin_g_dl")
    if hb is not None and hb < rules.hb_lt:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "anemia",
            "Low hemoglobin",
            f"Hemoglobin {_fmt(hb)} g/dL is below {_fmt(rules.hb_lt)} g/dL, indicating anemia.",
        ))
    rbg = labs.get("random_blood_glucose_mg_dl")
    if rbg is not None and rbg >= rules.rbg_ge:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "hyperglycemia_rbg",
            "Elevated random blood glucose",
            f"Random blood glucose {_fmt(rbg)} mg/dL is at or above {_fmt(rules.rbg_ge)} mg/dL.",
        ))
    hba1c = labs.get("hba1c_percent")
    if hba1c is not None and hba1c >= rules.hba1c_ge:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "hyperglycemia_hba1c",
            "Elevated HbA1c",
            f"HbA1c {_fmt(hba1c)}% is at or above {_fmt(rules.hba1c_ge)}%.",
        ))
    albumin = labs.get("urine_albumin")
    if albumin is not None and albumin >= rules.dipstick_albumin_ge:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "proteinuria",
            "Urine dipstick albumin",
            f"Urine albumin {albumin.value} is at or above "
            f"{rules.dipstick_albumin_ge.value}.",
        ))
    glucose = labs.get("urine_glucose")
    if glucose is not None and glucose >= rules.dipstick_glucose_ge:
        flags.append(RedFlag(
            CATEGORY_CRITICAL, "glycosuria",
            "Urine dipstick glucose",
            f"Urine glucose {glucose.value} is at or above "
            f"{rules.dipstick_glucose_ge.value}.",
        ))
    return flags


def labs_from_document(doc: EMRDocument) -> Dict[str, object]:
    """Extract threshold-relevant lab values from a document."""
    labs: Dict[str, object] = {}
    for fid in ("hemoglobin_g_dl", "random_blood_glucose_mg_dl", "hba1c_percent"):
        value = doc.values.get(fid)
        if isinstance(value, Numeric):
            labs[fid] = value.value
    for fid in ("urine_albumin", "urine_glucose"):
        value = doc.values.get(fid)
        if isinstance(value, Ordinal):
            labs[fid] = value.grade
    return labs


def bmi_from_document(doc: EMRDocument) -> Optional[float]:
    value = doc.values.get("bmi_kg_m2")
    return value.value if isinstance(value, Numeric) else None


def detect_missing(doc: EMRDocument, schema: EMRSchema,
                   vitals: Optional[VitalSigns] = None) -> List[RedFlag]:
    """Yellow flags: one per flag-required field with no information, plus
    one per absent vital sign."""
    flags: List[RedFlag] = []
    for spec in schema.flagging_specs():
        value = doc.values.get(spec.id, NoInformation())
        if isinstance(value, NoInformation):
            flags.append(RedFlag(
                CATEGORY_MISSING, f"missing:{spec.id}",
                f"{spec.label} not recorded",
                f"No value recorded for {spec.label}.",
            ))
    vitals = vitals or VitalSigns()
    for name in vitals.missing_names():
        flags.append(RedFlag(
            CATEGORY_MISSING, f"missing:vital:{name}",
            f"Vital sign {name} not recorded",
            f"No measurement recorded for {name}.",
        ))
    return flags


def merge_reports(
    deterministic: List[RedFlag],
    narrative: List[RedFlag],
    doc_ref: str = "",
    rules_version: str = "",
) -> RedFlagReport:
    """Deterministic flags are authoritative; narrative candidates that share
    a rule_id enrich the matching flag's detail, the rest are appended."""
    merged: List[RedFlag] = list(deterministic)
    by_rule = {f.rule_id: i for i, f in enumerate(merged)}
    extras: List[RedFlag] = []
    for candidate in narrative:
        idx = by_rule.get(candidate.rule_id)
        if idx is not None:
            base = merged[idx]
            merged[idx] = replace(
                base,
                detail=base.detail + " " + candidate.detail,
                source=SOURCE_MERGED,
                snippet_ids=base.snippet_ids + candidate.snippet_ids,
            )
        else:
            extras.append(replace(candidate, source=SOURCE_LLM))
    return RedFlagReport(flags=merged + extras, doc_ref=doc_ref,
                         rules_version=rules_version)


def _fmt(value) -> str:
    if value is None:
        return "?"
    return f"{value:g}"
