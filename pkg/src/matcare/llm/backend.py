"""Language-model backend adapters.

The wire contract is narrow: a rendered prompt plus an output-contract
descriptor in, structured JSON out. The bundled mock backend is a
deterministic rule table keyed on lexicon-normalized keywords, so the full
pipeline (and the acceptance suite) runs with no network or paid model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Protocol, Tuple

from ..emr.schema import EMRSchema, SectionKind
from ..emr.values import KIND_TRISTATE
from ..lexicon import Lexicon, normalize_text
from .contracts import (
    StructuredOutputSchema,
    TASK_CLARIFY,
    TASK_FILL_EMR,
    TASK_MEDICAL_QUESTIONS,
    TASK_RED_FLAGS,
    TASK_SUMMARY,
)


class BackendError(RuntimeError):
    """Backend unreachable or rejected the request; retryable."""


class LlmBackend(Protocol):
    id: str
    supports_structured_output: bool

    def complete(self, prompt_text: str, contract: StructuredOutputSchema) -> dict:
        ...


_BLOCK_RE = re.compile(r"^== ([A-Z_]+)(?: (.*?))? ==$", re.MULTILINE)


def parse_blocks(prompt_text: str) -> List[Tuple[str, str, str]]:
    """Recover (kind, meta, text) attachment blocks from a rendered prompt."""
    matches = list(_BLOCK_RE.finditer(prompt_text))
    blocks = []
    for i, m in enumerate(matches):
        start = m.end()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(prompt_text)
        blocks.append((m.group(1).lower(), m.group(2) or "", prompt_text[start:end].strip()))
    return blocks


def _blocks_of(blocks, kind: str) -> List[Tuple[str, str]]:
    return [(meta, text) for k, meta, text in blocks if k == kind]


# Split only at punctuation followed by whitespace/end so decimals survive.
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+(?=\s|$)")


@dataclass
class MockLlmBackend:
    """Offline deterministic backend.

    Extraction behavior is driven by rule files under matcare/data/mock;
    keyword detection for yes/no parameters is derived from schema labels
    after lexicon normalization.
    """

    schema: EMRSchema
    lexicon: Lexicon
    id: str = "mock-llm"
    supports_structured_output: bool = True
    emr_rules: List[dict] = field(default_factory=list)
    clarify_rules: List[dict] = field(default_factory=list)
    question_fixtures: List[dict] = field(default_factory=list)
    keyword_overrides: Dict[str, List[str]] = field(default_factory=dict)
    #: When set, responses for these tasks are replaced verbatim (fault injection).
    canned_responses: Dict[str, dict] = field(default_factory=dict)

    @classmethod
    def with_default_fixtures(cls, schema: EMRSchema, lexicon: Lexicon,
                              id: str = "mock-llm") -> "MockLlmBackend":
        data = resources.files("matcare.data.mock")
        return cls(
            schema=schema,
            lexicon=lexicon,
            id=id,
            emr_rules=json.loads(data.joinpath("emr_rules.json").read_text("utf-8")),
            clarify_rules=json.loads(data.joinpath("clarify_rules.json").read_text("utf-8")),
            question_fixtures=json.loads(
                data.joinpath("medical_questions.json").read_text("utf-8")),
            keyword_overrides=json.loads(
                data.joinpath("field_keywords.json").read_text("utf-8")),
        )

    # -- keyword table -----------------------------------------------------

    def _keywords(self) -> Dict[str, List[str]]:
        table: Dict[str, List[str]] = {}
        for spec in self.schema.specs:
            if spec.kind != KIND_TRISTATE:
                continue
            label = re.sub(r"\s*\(.*?\)", "", spec.label).strip().casefold()
            label = re.sub(r"^(family history|husband family history):\s*", "", label)
            normalized, _ = normalize_text(label, self.lexicon)
            table[spec.id] = [normalized]
        table.update({k: [p.casefold() for p in v]
                      for k, v in self.keyword_overrides.items()})
        return table

    # -- task dispatch -----------------------------------------------------

    def complete(self, prompt_text: str, contract: StructuredOutputSchema) -> dict:
        if contract.task in self.canned_responses:
            return self.canned_responses[contract.task]
        blocks = parse_blocks(prompt_text)
        if contract.task == TASK_CLARIFY:
            return self._clarify(blocks)
        if contract.task == TASK_FILL_EMR:
            return self._fill_emr(blocks)
        if contract.task == TASK_MEDICAL_QUESTIONS:
            return self._medical_questions(blocks)
        if contract.task == TASK_SUMMARY:
            return self._summary(blocks)
        if contract.task == TASK_RED_FLAGS:
            return self._red_flags(blocks)
        raise BackendError(f"mock backend does not handle task {contract.task!r}")

    # -- clarification questions -------------------------------------------

    def _clarify(self, blocks) -> dict:
        questions = []
        for meta, text in _blocks_of(blocks, "transcript"):
            normalized, _ = normalize_text(text.casefold(), self.lexicon)
            for rule in self.clarify_rules:
                if rule["contains"].casefold() in normalized or \
                        rule["contains"].casefold() in text.casefold():
                    questions.append({
                        "id": len(questions) + 1,
                        "question_text": rule["question_text"],
                        "target_field_ids": rule.get("target_field_ids", []),
                        "kind": rule.get("kind", "confirmation"),
                    })
        return {"questions": questions}

    # -- EMR filling ---------------------------------------------------------

    def _fill_emr(self, blocks) -> dict:
        fields: Dict[str, dict] = {}
        additional: Dict[str, List[str]] = {}
        keywords = self._keywords()

        def consume(sentence: str, section: Optional[str]) -> bool:
            hit = False
            norm, _ = normalize_text(sentence.casefold(), self.lexicon)
            for rule in self.emr_rules:
                if "contains" in rule:
                    needle = rule["contains"].casefold()
                    if needle in norm or needle in sentence.casefold():
                        fields.update(rule["sets"])
                        hit = True
                elif "regex" in rule:
                    m = re.search(rule["regex"], norm) or re.search(
                        rule["regex"], sentence, flags=re.IGNORECASE)
                    if m:
                        fields[rule["field"]] = _capture_value(rule, m)
                        hit = True
            for fid, phrases in keywords.items():
                if fid in fields:
                    continue
                spec = self.schema.get(fid)
                if section is not None and spec.section.value != section:
                    continue
                # Husband-side family history only fires when the sentence
                # says "husband", and vice versa for the patient's side.
                if fid.startswith("husband_") and "husband" not in norm:
                    continue
                if not fid.startswith("husband_") and \
                        self.schema.get(f"husband_{fid}") is not None and \
                        "husband" in norm:
                    continue
                for phrase in phrases:
                    if phrase and phrase in norm:
                        fields[fid] = _tristate_from_sentence(norm, phrase)
                        hit = True
                        break
            return hit

        for meta, text in _blocks_of(blocks, "transcript"):
            section = meta.split("=", 1)[1] if "=" in meta else None
            for sentence in _SENTENCE_SPLIT_RE.split(text):
                sentence = sentence.strip()
                if not sentence:
                    continue
                if not consume(sentence, section):
                    additional.setdefault(section or "", []).append(sentence)
        for _, text in _blocks_of(blocks, "answers"):
            for line in text.splitlines():
                if line.startswith("A: ") and line[3:].strip() not in ("", "(none)"):
                    consume(line[3:].strip(), None)

        additional_info = {
            section: ". ".join(parts) + "." if parts else ""
            for section, parts in additional.items() if section
        }
        return {"fields": fields, "additional_info": additional_info}

    # -- supplementary medical questions -------------------------------------

    def _medical_questions(self, blocks) -> dict:
        doc = _parse_document_block(blocks)
        questions = []
        for fixture in self.question_fixtures:
            requires = fixture.get("requires_affirmed")
            if requires and doc.get(requires, {}).get("type") != "affirmed":
                continue
            skip_if = fixture.get("skip_if_populated", [])
            if any(doc.get(fid, {}).get("type") not in (None, "no_information")
                   for fid in skip_if):
                continue
            questions.append({
                "id": len(questions) + 1,
                "question_text": fixture["question_text"],
                "rationale_field_ids": fixture.get("rationale_field_ids", []),
                "section": fixture.get("section", SectionKind.PERSONAL_MEDICAL_HISTORY.value),
            })
            if len(questions) == 7:
                break
        return {"questions": questions}

    # -- answer summarization -------------------------------------------------

    def _summary(self, blocks) -> dict:
        sections: Dict[str, List[str]] = {}
        current_section = None
        current_q = None
        for _, text in _blocks_of(blocks, "questions"):
            for line in text.splitlines():
                m = re.match(r"\[(.+?)\] Q: (.*)", line)
                if m:
                    current_section, current_q = m.group(1), m.group(2)
                elif line.startswith("A: ") and current_q is not None:
                    answer = line[3:].strip()
                    if answer:
                        sections.setdefault(current_section, []).append(
                            f"{current_q.rstrip('?')}: {answer}")
        return {"sections": {s: " ".join(items) for s, items in sections.items()}}

    # -- red-flag narratives ----------------------------------------------------

    def _red_flags(self, blocks) -> dict:
        doc = _parse_document_block(blocks)
        thresholds = {}
        for _, text in _blocks_of(blocks, "thresholds"):
            thresholds = json.loads(text)
        snippets = [(meta.split("=", 1)[1], text)
                    for meta, text in _blocks_of(blocks, "snippet")]

        def cite(term: str) -> List[str]:
            return [sid for sid, text in snippets if term.casefold() in text.casefold()]

        candidates = []
        bmi = doc.get("bmi_kg_m2", {})
        if bmi.get("type") == "numeric" and bmi["value"] > thresholds.get("bmi_gt", 30):
            detail = (f"The patient's BMI is {bmi['value']:.1f}, indicating obesity. "
                      "This increases risks such as preeclampsia and gestational "
                      "diabetes. A detailed nutritional and physical activity plan "
                      "should be developed.")
            candidates.append({"category": "critical", "rule_id": "obesity",
                               "title": "Obesity-related risks", "detail": detail,
                               "snippet_ids": cite("nutritional")})
        if doc.get("hypertension", {}).get("type") == "affirmed":
            detail = ("The patient has a history of hypertension, requiring regular "
                      "monitoring.")
            ids = cite("135/85")
            if ids:
                detail += (" Blood pressure should be checked regularly, ensuring "
                           "readings are within safe limits (135/85 mmHg or less) "
                           "if on antihypertensive treatment.")
            candidates.append({"category": "critical", "rule_id": "hypertension",
                               "title": "Hypertension", "detail": detail,
                               "snippet_ids": ids})
            cardiac_ids = cite("cardiac assessment")
            if cardiac_ids:
                candidates.append({
                    "category": "critical", "rule_id": "cardiac_referral",
                    "title": "Cardiac assessment",
                    "detail": ("Given the hypertensive status, a cardiologist "
                               "referral may be needed to rule out underlying "
                               "cardiac conditions."),
                    "snippet_ids": cardiac_ids,
                })
        family_dm = doc.get("family_diabetes", {}).get("type") == "affirmed"
        if family_dm and bmi.get("type") == "numeric" and \
                bmi["value"] > thresholds.get("bmi_gt", 30):
            candidates.append({
                "category": "critical", "rule_id": "gdm_screening",
                "title": "Gestational diabetes monitoring",
                "detail": ("Given the family history of diabetes and the patient's "
                           "obesity, screening for gestational diabetes is crucial. "
                           "Conduct an HbA1c test and a random blood glucose test."),
                "snippet_ids": cite("HbA1c"),
            })
        vitals_fields = ("systolic_bp_mmhg", "diastolic_bp_mmhg")
        if all(doc.get(f, {}).get("type") in (None, "no_information")
               for f in vitals_fields):
            candidates.append({
                "category": "missing", "rule_id": "missing:vitals",
                "title": "Vital signs not recorded",
                "detail": "No blood pressure measurement is recorded for this visit.",
                "snippet_ids": [],
            })
        return {"candidates": candidates}


def _capture_value(rule: dict, m: re.Match) -> dict:
    kind = rule.get("kind", "text")
    if kind == "numeric":
        return {"type": "numeric", "value": float(m.group(1)), "unit": rule["unit"]}
    if kind == "date":
        return {"type": "date", "value": m.group(1)}
    if kind == "text":
        value = rule.get("value", m.group(1) if m.groups() else m.group(0))
        return {"type": "text", "value": value.strip()}
    if kind == "ordinal":
        grades = {"negative": "negative", "trace": "trace", "1+": "plus1",
                  "2+": "plus2", "3+": "plus3", "4+": "plus4"}
        return {"type": "ordinal", "grade": grades[m.group(1)]}
    raise BackendError(f"unknown capture kind {kind!r}")


_NEGATION_RE = re.compile(
    r"\b(no|not|never|denies|denied|without|nahin)\b")
_NOINFO_RE = re.compile(r"\bno information\b")


def _tristate_from_sentence(sentence: str, phrase: str) -> dict:
    if _NOINFO_RE.search(sentence):
        return {"type": "no_information"}
    if _NEGATION_RE.search(sentence):
        return {"type": "denied"}
    return {"type": "affirmed"}


def _parse_document_block(blocks) -> Dict[str, dict]:
    """Flatten the serialized document attachment to field_id -> value JSON."""
    out: Dict[str, dict] = {}
    for _, text in _blocks_of(blocks, "document"):
        obj = json.loads(text)
        for section in obj.get("sections", []):
            for entry in section.get("fields", []):
                out[entry["id"]] = entry["value"]
    return out
