"""Per-visit state machine for the seven-step clinic flow.

Enforces the three hard rules of the visit lifecycle: clarification
questions are answered strictly in order, returning visits cannot modify
the four history sections carried over from the prior record, and a visit
cannot be saved while any critical red flag is unacknowledged. Every
accepted operation appends a TransitionEvent; replaying the log against a
fresh session reproduces the final state exactly.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence, Set, Tuple

from .emr.document import (
    EMRDocument,
    PROVENANCE_DETERMINISTIC,
    VitalSigns,
    apply_edits,
    document_from_json,
    document_to_json,
)
from .emr.schema import EMRSchema, RETURNING_LOCKED_SECTIONS, SectionKind
from .emr.values import Date, Numeric, Unit, value_from_json, value_to_json
from .lexicon import Lexicon
from .llm.backend import LlmBackend
from .llm.orchestrator import (
    ClarificationAnswer,
    ClarificationQuestion,
    MedicalQuestion,
    apply_summary_delta,
    generate_clarifications,
    generate_emr,
    generate_medical_questions,
    generate_redflag_narrative,
    summarize_question_answers,
)
from .retrieval import Index, flags_to_query, retrieve
from .rules import (
    RedFlagReport,
    ThresholdRuleSet,
    compute_bmi,
    detect_missing,
    evaluate_thresholds,
    gestation,
    labs_from_document,
    merge_reports,
)
from .transcripts import SectionTranscript


class WorkflowError(RuntimeError):
    """Operation rejected: wrong state, lock violation, or bad payload."""


class VisitState(str, Enum):
    REGISTERED = "registered"
    RECORDING = "recording"
    CLARIFYING = "clarifying"
    EMR_REVIEW = "emr_review"
    MEDICAL_QUESTIONS = "medical_questions"
    RED_FLAG_REVIEW = "red_flag_review"
    ULTRASOUND_ATTACH = "ultrasound_attach"
    FINALIZED = "finalized"


VISIT_KINDS = ("new", "returning")

STATUS_PENDING = "pending"
STATUS_TRANSCRIBED = "transcribed"
STATUS_CLARIFIED = "clarified"


@dataclass(frozen=True)
class TransitionEvent:
    op: str
    actor: str
    timestamp: str
    from_state: VisitState
    to_state: VisitState
    payload: dict
    digest: str

    def to_json(self) -> dict:
        return {
            "op": self.op,
            "actor": self.actor,
            "timestamp": self.timestamp,
            "from_state": self.from_state.value,
            "to_state": self.to_state.value,
            "payload": self.payload,
            "digest": self.digest,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TransitionEvent":
        return cls(
            op=obj["op"],
            actor=obj["actor"],
            timestamp=obj["timestamp"],
            from_state=VisitState(obj["from_state"]),
            to_state=VisitState(obj["to_state"]),
            payload=obj["payload"],
            digest=obj["digest"],
        )


def payload_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                           ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class UltrasoundExtractor(Protocol):
    id: str

    def extract(self, image: bytes) -> Dict[str, str]:
        """Return {fetal_movement, placenta_presence, scan_date, anomalies}."""
        ...


ULTRASOUND_FIELDS = ("fetal_movement", "placenta_presence", "scan_date",
                     "anomalies")


@dataclass
class MockUltrasoundExtractor:
    """Fixture extractor keyed on the image digest; unknown images fail."""

    fixtures: Dict[str, Dict[str, str]] = field(default_factory=dict)
    id: str = "mock-ultrasound"

    def extract(self, image: bytes) -> Dict[str, str]:
        digest = hashlib.sha256(image).hexdigest()
        if digest not in self.fixtures:
            raise RuntimeError(f"no extraction fixture for image {digest[:12]}")
        return dict(self.fixtures[digest])


@dataclass
class WorkflowContext:
    """Shared collaborators for a clinic deployment."""

    schema: EMRSchema
    lexicon: Lexicon
    backend: LlmBackend
    rules: ThresholdRuleSet
    retrieval_index: Optional[Index] = None
    ultrasound_extractor: Optional[UltrasoundExtractor] = None
    #: Narrative red flags are optional; deterministic flags always computed.
    narrative_flags: bool = True


@dataclass
class VisitSession:
    mr_number: str
    visit_id: str
    kind: str  # new | returning
    visit_date: _dt.date
    state: VisitState = VisitState.REGISTERED
    version: int = 0
    section_status: Dict[SectionKind, str] = field(default_factory=dict)
    locked_sections: Tuple[SectionKind, ...] = ()
    vitals: Optional[VitalSigns] = None
    transcripts: Dict[SectionKind, SectionTranscript] = field(default_factory=dict)
    clarifications: Dict[SectionKind, List[ClarificationQuestion]] = field(
        default_factory=dict)
    clarification_answers: Dict[SectionKind, List[ClarificationAnswer]] = field(
        default_factory=dict)
    clarification_cursor: Optional[Tuple[SectionKind, int]] = None
    prior_emr: Optional[EMRDocument] = None
    emr: Optional[EMRDocument] = None
    medical_questions: List[MedicalQuestion] = field(default_factory=list)
    report: Optional[RedFlagReport] = None
    acknowledgements: Set[str] = field(default_factory=set)
    ultrasound_digest: Optional[str] = None
    staged_ultrasound: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    event_log: List[TransitionEvent] = field(default_factory=list)

    def pending_sections(self) -> List[SectionKind]:
        return [s for s, status in self.section_status.items()
                if status == STATUS_PENDING]

    def unanswered_criticals(self) -> List[str]:
        if self.report is None:
            return []
        return [f.rule_id for f in self.report.critical_flags()
                if f.rule_id not in self.acknowledgements]


def _require_state(session: VisitSession, *states: VisitState) -> None:
    if session.state not in states:
        expected = ", ".join(s.value for s in states)
        raise WorkflowError(
            f"operation requires state {expected}, session is in "
            f"{session.state.value}")


def _record(session: VisitSession, op: str, actor: str, timestamp: str,
            from_state: VisitState, payload: dict) -> None:
    session.event_log.append(TransitionEvent(
        op=op,
        actor=actor,
        timestamp=timestamp,
        from_state=from_state,
        to_state=session.state,
        payload=payload,
        digest=payload_digest(payload),
    ))
    session.version += 1


def start_visit(
    mr_number: str,
    kind: str,
    ctx: WorkflowContext,
    visit_id: str = "visit-1",
    visit_date: Optional[_dt.date] = None,
    prior: Optional[EMRDocument] = None,
) -> VisitSession:
    if kind not in VISIT_KINDS:
        raise WorkflowError(f"unknown visit kind {kind!r}")
    if kind == "returning" and prior is None:
        raise WorkflowError("returning visit requires the prior record")
    locked = RETURNING_LOCKED_SECTIONS if kind == "returning" else ()
    session = VisitSession(
        mr_number=mr_number,
        visit_id=visit_id,
        kind=kind,
        visit_date=visit_date or _dt.date.today(),
        locked_sections=tuple(locked),
        prior_emr=prior.copy() if prior is not None else None,
    )
    for section in SectionKind:
        session.section_status[section] = (
            STATUS_CLARIFIED if section in session.locked_sections
            else STATUS_PENDING)
    return session


def enter_vitals(session: VisitSession, vitals: VitalSigns, actor: str,
                 ctx: WorkflowContext, timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.REGISTERED)
    problems = vitals.problems()
    if problems:
        raise WorkflowError("invalid vitals: " + "; ".join(problems))
    from_state = session.state
    session.vitals = vitals
    session.state = VisitState.RECORDING
    _record(session, "enter_vitals", actor, timestamp, from_state,
            vitals.to_json())
    return session


def attach_transcript(session: VisitSession, section: SectionKind,
                      transcript: SectionTranscript, actor: str,
                      ctx: WorkflowContext, timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.RECORDING)
    if section in session.locked_sections:
        raise WorkflowError(
            f"section {section.value} is locked on a returning visit")
    if transcript.section != section:
        raise WorkflowError(
            f"transcript is for section {transcript.section.value}, "
            f"not {section.value}")
    from_state = session.state
    session.transcripts[section] = transcript
    session.section_status[section] = STATUS_TRANSCRIBED
    questions = generate_clarifications(transcript, ctx.schema, ctx.lexicon,
                                        ctx.backend)
    session.clarifications[section] = questions
    if not questions:
        session.section_status[section] = STATUS_CLARIFIED
    if not session.pending_sections():
        session.state = VisitState.CLARIFYING
        _advance_cursor(session, ctx)
    _record(session, "attach_transcript", actor, timestamp, from_state, {
        "section": section.value,
        "raw_text": transcript.raw_text,
        "backend_id": transcript.backend_id,
    })
    return session


def _advance_cursor(session: VisitSession, ctx: WorkflowContext) -> None:
    """Point the cursor at the first unanswered question; if none remain,
    generate the EMR and move to review."""
    for section in sorted(session.clarifications, key=lambda s: s.ordinal):
        answered = len(session.clarification_answers.get(section, []))
        if answered < len(session.clarifications[section]):
            session.clarification_cursor = (section, answered + 1)
            return
    session.clarification_cursor = None
    _generate_document(session, ctx)
    session.state = VisitState.EMR_REVIEW


def answer_clarification(session: VisitSession, answer: ClarificationAnswer,
                         actor: str, ctx: WorkflowContext,
                         timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.CLARIFYING)
    if session.clarification_cursor is None:
        raise WorkflowError("no clarification question awaits an answer")
    section, expected = session.clarification_cursor
    if answer.question_id != expected:
        raise WorkflowError(
            f"questions must be answered in order: expected question "
            f"{expected} of {section.value}, got {answer.question_id}")
    from_state = session.state
    session.clarification_answers.setdefault(section, []).append(answer)
    if len(session.clarification_answers[section]) == \
            len(session.clarifications[section]):
        session.section_status[section] = STATUS_CLARIFIED
    _advance_cursor(session, ctx)
    _record(session, "answer_clarification", actor, timestamp, from_state, {
        "section": section.value,
        "question_id": answer.question_id,
        "answer_text": answer.answer_text,
    })
    return session


def _generate_document(session: VisitSession, ctx: WorkflowContext) -> None:
    answers: List[ClarificationAnswer] = []
    questions: List[ClarificationQuestion] = []
    for section in sorted(session.clarifications, key=lambda s: s.ordinal):
        questions.extend(session.clarifications[section])
        answers.extend(session.clarification_answers.get(section, []))
    doc = generate_emr(list(session.transcripts.values()), answers,
                       ctx.schema, ctx.lexicon, ctx.backend,
                       questions=questions)
    if session.prior_emr is not None:
        # Carry sections 1-4 forward verbatim from the prior record.
        for spec in ctx.schema.specs:
            if spec.section in session.locked_sections:
                doc.values[spec.id] = session.prior_emr.values[spec.id]
                prov = session.prior_emr.provenance.get(spec.id)
                if prov is not None:
                    doc.provenance[spec.id] = prov
                else:
                    doc.provenance.pop(spec.id, None)
        for section in session.locked_sections:
            doc.additional_info[section] = \
                session.prior_emr.additional_info.get(section, "")
    _apply_deterministic_fields(session, doc)
    session.emr = doc


def _apply_deterministic_fields(session: VisitSession,
                                doc: EMRDocument) -> None:
    """Vitals-derived measurements override anything transcribed."""
    vitals = session.vitals
    if vitals is None:
        return
    def put(field_id: str, value) -> None:
        doc.values[field_id] = value
        doc.provenance[field_id] = PROVENANCE_DETERMINISTIC
    if vitals.systolic_mmHg is not None:
        put("systolic_bp_mmhg", Numeric(float(vitals.systolic_mmHg), Unit.MMHG))
    if vitals.diastolic_mmHg is not None:
        put("diastolic_bp_mmhg", Numeric(float(vitals.diastolic_mmHg), Unit.MMHG))
    if vitals.height_cm is not None and vitals.weight_kg is not None:
        put("bmi_kg_m2", Numeric(compute_bmi(vitals.weight_kg, vitals.height_cm),
                                 Unit.KG_M2))
    lmp = doc.values.get("lmp_date")
    if isinstance(lmp, Date):
        result = gestation(lmp.value, session.visit_date)
        if not result.implausible:
            put("weeks_of_gestation", Numeric(float(result.weeks), Unit.WEEKS))
            put("edd_date", Date(result.edd))


def finalize_emr(session: VisitSession, edits: Sequence[Tuple[str, object]],
                 actor: str, ctx: WorkflowContext,
                 timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.EMR_REVIEW)
    assert session.emr is not None
    for field_id, _ in edits:
        spec = ctx.schema.get(field_id)
        if spec is None:
            raise WorkflowError(f"unknown field {field_id!r}")
        if spec.section in session.locked_sections:
            raise WorkflowError(
                f"field {field_id} belongs to locked section "
                f"{spec.section.value}")
    from_state = session.state
    session.emr = apply_edits(session.emr, list(edits), ctx.schema)
    session.medical_questions = generate_medical_questions(
        session.emr, ctx.schema, ctx.backend)
    session.state = VisitState.MEDICAL_QUESTIONS
    _record(session, "finalize_emr", actor, timestamp, from_state, {
        "edits": [[fid, value_to_json(val)] for fid, val in edits],
    })
    return session


def complete_medical_questions(
    session: VisitSession,
    answers: Dict[int, str],
    actor: str,
    ctx: WorkflowContext,
    timestamp: str = "",
    allow_skip: bool = True,
) -> VisitSession:
    _require_state(session, VisitState.MEDICAL_QUESTIONS)
    assert session.emr is not None
    unanswered = [q.id for q in session.medical_questions
                  if not answers.get(q.id, "").strip()]
    if unanswered and not allow_skip:
        raise WorkflowError(
            "unanswered medical questions: " +
            ", ".join(str(i) for i in unanswered))
    from_state = session.state
    qa = [(q, answers.get(q.id, "")) for q in session.medical_questions]
    delta = summarize_question_answers(session.emr, qa, ctx.schema, ctx.backend)
    session.emr = apply_summary_delta(session.emr, delta)
    _compute_report(session, ctx)
    session.state = VisitState.RED_FLAG_REVIEW
    _record(session, "complete_medical_questions", actor, timestamp,
            from_state, {
                "answers": {str(k): v for k, v in sorted(answers.items())},
            })
    return session


def _compute_report(session: VisitSession, ctx: WorkflowContext) -> None:
    doc = session.emr
    assert doc is not None
    labs = labs_from_document(doc)
    bmi = None
    value = doc.values.get("bmi_kg_m2")
    if isinstance(value, Numeric):
        bmi = value.value
    deterministic = evaluate_thresholds(session.vitals, labs, bmi, ctx.rules)
    deterministic += detect_missing(doc, ctx.schema, session.vitals)
    narrative = []
    if ctx.narrative_flags:
        snippets = []
        if ctx.retrieval_index is not None and deterministic:
            query = flags_to_query(deterministic, ctx.lexicon)
            if query:
                snippets = retrieve(query, ctx.retrieval_index, k=6)
        narrative = generate_redflag_narrative(doc, ctx.schema, ctx.rules,
                                               snippets, ctx.backend)
    session.report = merge_reports(deterministic, narrative,
                                   doc_ref=session.visit_id,
                                   rules_version=ctx.rules.version)
    # Edits may have changed the flag set; stale acknowledgements drop out.
    valid = {f.rule_id for f in session.report.flags}
    session.acknowledgements &= valid


def acknowledge_flags(session: VisitSession, flag_ids: Sequence[str],
                      actor: str, ctx: WorkflowContext,
                      timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.RED_FLAG_REVIEW)
    assert session.report is not None
    known = {f.rule_id for f in session.report.flags}
    for flag_id in flag_ids:
        if flag_id not in known:
            raise WorkflowError(f"unknown flag id {flag_id!r}")
    from_state = session.state
    session.acknowledgements.update(flag_ids)
    _record(session, "acknowledge_flags", actor, timestamp, from_state, {
        "flag_ids": sorted(flag_ids),
    })
    return session


def save_visit(session: VisitSession, actor: str, ctx: WorkflowContext,
               timestamp: str = "",
               want_ultrasound: bool = False) -> VisitSession:
    _require_state(session, VisitState.RED_FLAG_REVIEW)
    outstanding = session.unanswered_criticals()
    if outstanding:
        raise WorkflowError(
            "cannot save: unacknowledged critical flags: " +
            ", ".join(outstanding))
    from_state = session.state
    session.state = (VisitState.ULTRASOUND_ATTACH if want_ultrasound
                     else VisitState.FINALIZED)
    _record(session, "save_visit", actor, timestamp, from_state, {
        "want_ultrasound": want_ultrasound,
    })
    return session


def attach_ultrasound(session: VisitSession, image: bytes, actor: str,
                      ctx: WorkflowContext, timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.ULTRASOUND_ATTACH)
    from_state = session.state
    digest = hashlib.sha256(image).hexdigest()
    session.ultrasound_digest = digest
    staged: Dict[str, str] = {}
    warning = ""
    if ctx.ultrasound_extractor is None:
        warning = "no ultrasound extractor configured; image stored only"
    else:
        try:
            extracted = ctx.ultrasound_extractor.extract(image)
            staged = {k: str(extracted.get(k, "")) for k in ULTRASOUND_FIELDS}
        except Exception as exc:
            warning = f"ultrasound extraction failed: {exc}"
    session.staged_ultrasound = staged
    if warning:
        session.warnings.append(warning)
    _record(session, "attach_ultrasound", actor, timestamp, from_state, {
        "image_digest": digest,
        "staged": dict(sorted(staged.items())),
        "warning": warning,
    })
    return session


def confirm_ultrasound(session: VisitSession, accept: bool, actor: str,
                       ctx: WorkflowContext, timestamp: str = "") -> VisitSession:
    _require_state(session, VisitState.ULTRASOUND_ATTACH)
    assert session.emr is not None
    from_state = session.state
    if accept and session.staged_ultrasound:
        # Fixed field order so live runs and replays render identically.
        note = "Ultrasound: " + "; ".join(
            f"{k.replace('_', ' ')}: {session.staged_ultrasound[k]}"
            for k in ULTRASOUND_FIELDS if session.staged_ultrasound.get(k))
        existing = session.emr.additional_info.get(
            SectionKind.PRESENT_PREGNANCY, "")
        session.emr.additional_info[SectionKind.PRESENT_PREGNANCY] = \
            f"{existing} {note}".strip()
    session.state = VisitState.FINALIZED
    _record(session, "confirm_ultrasound", actor, timestamp, from_state, {
        "accept": accept,
    })
    return session


# -- replay -------------------------------------------------------------------

def replay(
    mr_number: str,
    kind: str,
    events: Sequence[TransitionEvent],
    ctx: WorkflowContext,
    visit_id: str = "visit-1",
    visit_date: Optional[_dt.date] = None,
    prior: Optional[EMRDocument] = None,
) -> VisitSession:
    """Rebuild a session by applying the recorded events in order."""
    session = start_visit(mr_number, kind, ctx, visit_id=visit_id,
                          visit_date=visit_date, prior=prior)
    for event in events:
        apply_event(session, event, ctx)
    return session


def apply_event(session: VisitSession, event: TransitionEvent,
                ctx: WorkflowContext) -> VisitSession:
    payload = event.payload
    op = event.op
    if op == "enter_vitals":
        return enter_vitals(session, VitalSigns.from_json(payload),
                            event.actor, ctx, timestamp=event.timestamp)
    if op == "attach_transcript":
        section = SectionKind(payload["section"])
        transcript = SectionTranscript.from_text(
            section, payload["raw_text"], backend_id=payload["backend_id"])
        return attach_transcript(session, section, transcript, event.actor,
                                 ctx, timestamp=event.timestamp)
    if op == "answer_clarification":
        answer = ClarificationAnswer(payload["question_id"],
                                     payload["answer_text"])
        return answer_clarification(session, answer, event.actor, ctx,
                                    timestamp=event.timestamp)
    if op == "finalize_emr":
        edits = [(fid, value_from_json(raw, path=f"edits.{fid}"))
                 for fid, raw in payload["edits"]]
        return finalize_emr(session, edits, event.actor, ctx,
                            timestamp=event.timestamp)
    if op == "complete_medical_questions":
        answers = {int(k): v for k, v in payload["answers"].items()}
        return complete_medical_questions(session, answers, event.actor, ctx,
                                          timestamp=event.timestamp)
    if op == "acknowledge_flags":
        return acknowledge_flags(session, payload["flag_ids"], event.actor,
                                 ctx, timestamp=event.timestamp)
    if op == "save_visit":
        return save_visit(session, event.actor, ctx,
                          timestamp=event.timestamp,
                          want_ultrasound=payload["want_ultrasound"])
    if op == "attach_ultrasound":
        # Replay stages the recorded extraction rather than re-running the
        # extractor, so outages do not change history.
        _require_state(session, VisitState.ULTRASOUND_ATTACH)
        from_state = session.state
        session.ultrasound_digest = payload["image_digest"]
        session.staged_ultrasound = dict(payload["staged"])
        if payload["warning"]:
            session.warnings.append(payload["warning"])
        _record(session, "attach_ultrasound", event.actor, event.timestamp,
                from_state, payload)
        return session
    if op == "confirm_ultrasound":
        return confirm_ultrasound(session, payload["accept"], event.actor,
                                  ctx, timestamp=event.timestamp)
    raise WorkflowError(f"unknown event op {op!r}")


def session_snapshot(session: VisitSession, schema: EMRSchema) -> dict:
    """Wire-format view of a session (used by the record service)."""
    return {
        "mr_number": session.mr_number,
        "visit_id": session.visit_id,
        "kind": session.kind,
        "visit_date": session.visit_date.isoformat(),
        "state": session.state.value,
        "version": session.version,
        "section_status": {s.value: session.section_status[s]
                           for s in SectionKind},
        "locked_sections": [s.value for s in session.locked_sections],
        "vitals": session.vitals.to_json() if session.vitals else None,
        "clarification_cursor": (
            [session.clarification_cursor[0].value,
             session.clarification_cursor[1]]
            if session.clarification_cursor else None),
        "clarifications": {
            s.value: [{"id": q.id, "question_text": q.question_text,
                       "target_field_ids": list(q.target_field_ids),
                       "kind": q.kind}
                      for q in qs]
            for s, qs in sorted(session.clarifications.items(),
                                key=lambda kv: kv[0].ordinal)},
        "medical_questions": [
            {"id": q.id, "question_text": q.question_text,
             "rationale_field_ids": list(q.rationale_field_ids),
             "section": q.section.value}
            for q in session.medical_questions],
        "emr": (document_to_json(session.emr, schema)
                if session.emr is not None else None),
        "report": session.report.to_json() if session.report else None,
        "acknowledgements": sorted(session.acknowledgements),
        "ultrasound_digest": session.ultrasound_digest,
        "staged_ultrasound": dict(sorted(session.staged_ultrasound.items())),
        "warnings": list(session.warnings),
        "event_log": [e.to_json() for e in session.event_log],
    }
