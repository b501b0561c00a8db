"""High-level driver for the four generation tasks.

Each operation builds a prompt, calls the backend, validates the structured
response against its contract, and converts it to domain objects. Responses
failing validation are re-asked up to twice before a terminal error; backend
transport failures propagate as retryable ``BackendError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..emr.document import (
    EMRDocument,
    PROVENANCE_LLM,
    blank_document,
    validate_document,
)
from ..emr.schema import EMRSchema, SectionKind
from ..emr.values import KIND_TRISTATE, Denied, NoInformation, value_from_json
from ..lexicon import Lexicon
from ..retrieval import Snippet
from ..rules import RedFlag, ThresholdRuleSet
from ..transcripts import SectionTranscript
from .backend import LlmBackend
from .contracts import ContractError, StructuredOutputSchema, validate_response
from .prompts import (
    PromptBundle,
    build_clarification_prompt,
    build_fill_prompt,
    build_medical_questions_prompt,
    build_red_flags_prompt,
    build_summary_prompt,
    render,
    snippet_id,
)

#: Re-ask attempts on schema-invalid output before giving up.
MAX_REASKS = 2


class OrchestrationError(RuntimeError):
    """Terminal generation failure (contract still violated after re-asks)."""


@dataclass(frozen=True)
class ClarificationQuestion:
    id: int  # ordinal, contiguous from 1
    question_text: str
    target_field_ids: Tuple[str, ...]
    kind: str  # misspelling | confirmation | missing


@dataclass(frozen=True)
class ClarificationAnswer:
    question_id: int
    answer_text: str


@dataclass(frozen=True)
class MedicalQuestion:
    id: int
    question_text: str
    rationale_field_ids: Tuple[str, ...]
    section: SectionKind


def _complete_validated(backend: LlmBackend, bundle: PromptBundle) -> dict:
    prompt_text = render(bundle)
    last_error: Optional[ContractError] = None
    for _ in range(MAX_REASKS + 1):
        response = backend.complete(prompt_text, bundle.output_contract)
        try:
            validate_response(response, bundle.output_contract)
            return response
        except ContractError as exc:
            last_error = exc
    raise OrchestrationError(
        f"{bundle.task}: response still invalid after {MAX_REASKS} re-asks: "
        f"{last_error}")


# -- clarification questions -------------------------------------------------

def generate_clarifications(
    transcript: SectionTranscript,
    schema: EMRSchema,
    lexicon: Lexicon,
    backend: LlmBackend,
) -> List[ClarificationQuestion]:
    bundle = build_clarification_prompt(transcript, schema, lexicon)
    response = _complete_validated(backend, bundle)
    questions = parse_clarifications(response, bundle.output_contract)
    for q in questions:
        for fid in q.target_field_ids:
            if schema.get(fid) is None:
                raise ContractError(f"unknown target field {fid!r}",
                                    path=f"$.questions[{q.id - 1}].target_field_ids")
    return questions


def parse_clarifications(
    response: dict, contract: StructuredOutputSchema
) -> List[ClarificationQuestion]:
    validate_response(response, contract)
    questions = []
    for i, item in enumerate(response["questions"]):
        if item["id"] != i + 1:
            raise ContractError(
                f"ordinals must be contiguous from 1, got {item['id']} at "
                f"position {i + 1}", path=f"$.questions[{i}].id")
        questions.append(ClarificationQuestion(
            id=item["id"],
            question_text=item["question_text"],
            target_field_ids=tuple(item.get("target_field_ids", [])),
            kind=item["kind"],
        ))
    return questions


# -- EMR filling -------------------------------------------------------------

def generate_emr(
    transcripts: Sequence[SectionTranscript],
    answers: Sequence[ClarificationAnswer],
    schema: EMRSchema,
    lexicon: Lexicon,
    backend: LlmBackend,
    questions: Sequence[ClarificationQuestion] = (),
) -> EMRDocument:
    """Fill a document from section transcripts plus clarification answers.

    Unmentioned yes/no fields default to Denied; everything else unmentioned
    stays NoInformation. Off-template content lands in the originating
    section's additional_info.
    """
    question_text = {q.id: q.question_text for q in questions}
    qa = [(question_text.get(a.question_id, f"(question {a.question_id})"),
           a.answer_text) for a in answers]
    bundle = build_fill_prompt(transcripts, qa, schema, lexicon)
    response = _complete_validated(backend, bundle)

    doc = blank_document(schema)
    explicit = set(response["fields"])
    for fid, raw in response["fields"].items():
        value = value_from_json(raw, path=f"fields.{fid}")
        doc.values[fid] = value
        if not isinstance(value, NoInformation):
            doc.provenance[fid] = PROVENANCE_LLM
    covered = {t.section for t in transcripts}
    for spec in schema.specs:
        # An explicit no_information from the model (the transcript said
        # "no information about X") must not be defaulted to Denied.
        if spec.kind == KIND_TRISTATE and spec.section in covered and \
                spec.id not in explicit and \
                isinstance(doc.values[spec.id], NoInformation):
            doc.values[spec.id] = Denied()
            doc.provenance[spec.id] = PROVENANCE_LLM
    for section_name, text in response["additional_info"].items():
        if text.strip():
            doc.additional_info[SectionKind(section_name)] = text.strip()

    report = validate_document(doc, schema)
    if not report.ok:
        first = report.violations[0]
        raise OrchestrationError(
            f"generated document invalid: {first.field_id}: {first.message}")
    return doc


# -- supplementary medical questions -----------------------------------------

def generate_medical_questions(
    doc: EMRDocument,
    schema: EMRSchema,
    backend: LlmBackend,
) -> List[MedicalQuestion]:
    bundle = build_medical_questions_prompt(doc, schema)
    response = _complete_validated(backend, bundle)
    questions = []
    for i, item in enumerate(response["questions"]):
        questions.append(MedicalQuestion(
            id=i + 1,
            question_text=item["question_text"],
            rationale_field_ids=tuple(item.get("rationale_field_ids", [])),
            section=SectionKind(item.get(
                "section", SectionKind.PERSONAL_MEDICAL_HISTORY.value)),
        ))
    if not 3 <= len(questions) <= 7:
        raise OrchestrationError(
            f"expected 3-7 medical questions, backend produced {len(questions)}")
    return questions


def summarize_question_answers(
    doc: EMRDocument,
    qa: Sequence[Tuple[MedicalQuestion, str]],
    schema: EMRSchema,
    backend: LlmBackend,
) -> Dict[SectionKind, str]:
    """Summarize answered questions into per-section additional_info deltas.

    Unanswered questions (empty answer text) are ignored; with nothing
    answered the delta is empty and the backend is not consulted.
    """
    answered = [(q.section.value, q.question_text, a.strip())
                for q, a in qa if a.strip()]
    if not answered:
        return {}
    bundle = build_summary_prompt(doc, schema, answered)
    response = _complete_validated(backend, bundle)
    return {SectionKind(name): text
            for name, text in response["sections"].items() if text.strip()}


def apply_summary_delta(doc: EMRDocument,
                        delta: Dict[SectionKind, str]) -> EMRDocument:
    out = doc.copy()
    for section, text in delta.items():
        existing = out.additional_info.get(section, "")
        out.additional_info[section] = f"{existing} {text}".strip()
    return out


# -- red-flag narratives -----------------------------------------------------

def generate_redflag_narrative(
    doc: EMRDocument,
    schema: EMRSchema,
    rules: ThresholdRuleSet,
    snippets: Sequence[Snippet],
    backend: LlmBackend,
) -> List[RedFlag]:
    bundle = build_red_flags_prompt(doc, schema, rules, snippets)
    response = _complete_validated(backend, bundle)
    known_ids = {snippet_id(s) for s in snippets}
    flags = []
    for i, item in enumerate(response["candidates"]):
        cited = tuple(item.get("snippet_ids", []))
        for sid in cited:
            if sid not in known_ids:
                raise ContractError(f"cites unknown snippet {sid!r}",
                                    path=f"$.candidates[{i}].snippet_ids")
        flags.append(RedFlag(
            category=item["category"],
            rule_id=item["rule_id"],
            title=item["title"],
            detail=item["detail"],
            source="llm",
            snippet_ids=cited,
        ))
    return flags
