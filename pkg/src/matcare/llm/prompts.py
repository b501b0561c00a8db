"""Prompt assembly for the four generation tasks.

Rendering is a pure function of its inputs: identical transcripts, schema,
lexicon, and answers produce byte-identical prompt text. Attachments are
rendered as delimited blocks so adapters (including the offline mock) can
locate them unambiguously.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from ..emr.document import EMRDocument, document_to_json
from ..emr.schema import EMRSchema, SectionKind
from ..lexicon import Lexicon
from ..retrieval import Snippet
from ..rules import ThresholdRuleSet
from ..transcripts import SectionTranscript
from .contracts import (
    StructuredOutputSchema,
    TASK_CLARIFY,
    TASK_FILL_EMR,
    TASK_MEDICAL_QUESTIONS,
    TASK_RED_FLAGS,
    TASK_SUMMARY,
    clarify_contract,
    fill_emr_contract,
    medical_questions_contract,
    red_flags_contract,
    summary_contract,
)


class PromptError(ValueError):
    """Unusable prompt input (e.g. an empty transcript)."""


@dataclass(frozen=True)
class Attachment:
    kind: str  # schema | lexicon | transcript | answers | document | thresholds | snippet | questions
    meta: str  # e.g. section name or snippet id; empty when not applicable
    text: str


@dataclass(frozen=True)
class PromptBundle:
    task: str
    system_text: str
    user_text: str
    attachments: Tuple[Attachment, ...]
    output_contract: StructuredOutputSchema


def _load_template(name: str) -> Tuple[str, str]:
    raw = resources.files("matcare.data.prompts").joinpath(f"{name}.txt").read_text("utf-8")
    lines = [l for l in raw.splitlines() if not l.startswith("#")]
    system: List[str] = []
    user: List[str] = []
    target = None
    for line in lines:
        if line.strip() == "[system]":
            target = system
        elif line.strip() == "[user]":
            target = user
        elif target is not None:
            target.append(line)
    return "\n".join(system).strip(), "\n".join(user).strip()


def render(bundle: PromptBundle) -> str:
    """Deterministic textual rendering sent to the backend."""
    parts = [bundle.system_text, "", bundle.user_text, ""]
    for att in bundle.attachments:
        header = f"== {att.kind.upper()}"
        if att.meta:
            header += f" {att.meta}"
        header += " =="
        parts.append(header)
        parts.append(att.text)
        parts.append("")
    return "\n".join(parts)


def _schema_excerpt(schema: EMRSchema, sections: Sequence[SectionKind]) -> str:
    lines = []
    for section in sections:
        lines.append(f"[{section.value}]")
        for spec in schema.section_specs(section):
            lines.append(f"{spec.id}: {spec.label} ({spec.kind})")
        lines.append(f"additional_information: free text")
    return "\n".join(lines)


def _lexicon_excerpt(lexicon: Lexicon, texts: Sequence[str]) -> str:
    """Entries relevant to the given texts: any variant or canonical present."""
    haystack = " ".join(texts).casefold()
    lines = []
    for entry in lexicon.entries:
        hits = [v for v in (entry.canonical, *entry.variants)
                if v.casefold() in haystack]
        if hits and entry.variants:
            lines.append(f"{entry.canonical} <= {', '.join(entry.variants)}")
        elif hits:
            lines.append(entry.canonical)
    return "\n".join(lines)


def _transcript_attachment(transcript: SectionTranscript) -> Attachment:
    return Attachment("transcript", f"section={transcript.section.value}",
                      transcript.collapsed_text)


def build_clarification_prompt(
    transcript: SectionTranscript,
    schema: EMRSchema,
    lexicon: Lexicon,
) -> PromptBundle:
    if not transcript.collapsed_text.strip():
        raise PromptError(f"empty transcript for section {transcript.section.value}")
    system_text, user_text = _load_template("clarify")
    attachments = (
        Attachment("schema", f"section={transcript.section.value}",
                   _schema_excerpt(schema, [transcript.section])),
        Attachment("lexicon", "", _lexicon_excerpt(lexicon, [transcript.collapsed_text])),
        _transcript_attachment(transcript),
    )
    return PromptBundle(TASK_CLARIFY, system_text, user_text, attachments,
                        clarify_contract())


def build_fill_prompt(
    transcripts: Sequence[SectionTranscript],
    answers: Sequence[Tuple[str, str]],  # (question_text, answer_text)
    schema: EMRSchema,
    lexicon: Lexicon,
) -> PromptBundle:
    if not transcripts:
        raise PromptError("no transcripts supplied")
    system_text, user_text = _load_template("fill_emr")
    ordered = sorted(transcripts, key=lambda t: t.section.ordinal)
    texts = [t.collapsed_text for t in ordered]
    answer_lines = "\n".join(f"Q: {q}\nA: {a}" for q, a in answers) or "(none)"
    attachments = (
        Attachment("schema", "", _schema_excerpt(schema, [t.section for t in ordered])),
        Attachment("lexicon", "", _lexicon_excerpt(lexicon, texts)),
        *[_transcript_attachment(t) for t in ordered],
        Attachment("answers", "", answer_lines),
    )
    return PromptBundle(TASK_FILL_EMR, system_text, user_text, attachments,
                        fill_emr_contract(schema))


def build_medical_questions_prompt(doc: EMRDocument, schema: EMRSchema) -> PromptBundle:
    system_text, user_text = _load_template("medical_questions")
    attachments = (
        Attachment("document", "",
                   json.dumps(document_to_json(doc, schema), ensure_ascii=False,
                              separators=(",", ":"))),
    )
    return PromptBundle(TASK_MEDICAL_QUESTIONS, system_text, user_text, attachments,
                        medical_questions_contract())


def build_summary_prompt(
    doc: EMRDocument,
    schema: EMRSchema,
    qa: Sequence[Tuple[str, str, str]],  # (section value, question_text, answer_text)
) -> PromptBundle:
    system_text, user_text = _load_template("summary")
    qa_lines = "\n".join(f"[{section}] Q: {q}\nA: {a}" for section, q, a in qa)
    attachments = (
        Attachment("document", "",
                   json.dumps(document_to_json(doc, schema), ensure_ascii=False,
                              separators=(",", ":"))),
        Attachment("questions", "", qa_lines),
    )
    return PromptBundle(TASK_SUMMARY, system_text, user_text, attachments,
                        summary_contract())


def build_red_flags_prompt(
    doc: EMRDocument,
    schema: EMRSchema,
    rules: ThresholdRuleSet,
    snippets: Sequence[Snippet] = (),
) -> PromptBundle:
    system_text, user_text = _load_template("red_flags")
    attachments = [
        Attachment("document", "",
                   json.dumps(document_to_json(doc, schema), ensure_ascii=False,
                              separators=(",", ":"))),
        Attachment("thresholds", "",
                   json.dumps(rules.to_json(), ensure_ascii=False,
                              separators=(",", ":"))),
    ]
    for snippet in snippets:
        attachments.append(
            Attachment("snippet", f"id={snippet.doc_id}:{snippet.span[0]}-{snippet.span[1]}",
                       snippet.text)
        )
    return PromptBundle(TASK_RED_FLAGS, system_text, user_text, tuple(attachments),
                        red_flags_contract())


def snippet_id(snippet: Snippet) -> str:
    return f"{snippet.doc_id}:{snippet.span[0]}-{snippet.span[1]}"
