"""Visit lifecycle: ordering, locks, save gating, and event-log replay."""

import datetime as dt
import hashlib
import json

import pytest

from matcare.emr.document import PROVENANCE_DETERMINISTIC, VitalSigns
from matcare.emr.schema import SectionKind
from matcare.emr.values import Affirmed, Date, Denied, Numeric, Text
from matcare.llm.orchestrator import ClarificationAnswer
from matcare.transcripts import SectionTranscript
from matcare.workflow import (
    MockUltrasoundExtractor,
    VisitState,
    WorkflowContext,
    WorkflowError,
    acknowledge_flags,
    answer_clarification,
    apply_event,
    attach_transcript,
    attach_ultrasound,
    complete_medical_questions,
    confirm_ultrasound,
    enter_vitals,
    finalize_emr,
    payload_digest,
    replay,
    save_visit,
    session_snapshot,
    start_visit,
)

VISIT_DATE = dt.date(2026, 8, 23)

SECTION_TEXTS = {
    SectionKind.PERSONAL_MEDICAL_HISTORY: (
        "Patient blood group is B positive. Gravida 2 para 1. "
        "She has a history of hypertension. Surgical history is not "
        "significant. Last menstrual period was 2026-02-01."),
    SectionKind.FAMILY_HISTORY: "Mother has sugar.",
    SectionKind.SOCIO_ECONOMIC_HISTORY:
        "The patient lives in a joint family with 6 family members.",
    SectionKind.PAST_PREGNANCY:
        "One previous delivery by spontaneous vaginal delivery.",
    SectionKind.PRESENT_PREGNANCY:
        "Hemoglobin is 10.5. Fundal height is 28.",
    SectionKind.PROPOSED_PLAN:
        "Plan is to continue routine antenatal care. Follow-up after two weeks.",
}

VITALS = VitalSigns(height_cm=154, weight_kg=90, systolic_mmHg=150,
                    diastolic_mmHg=95, temperature_C=37.0, pulse_bpm=80)

US_IMAGE = b"ultrasound-image-bytes"
US_FIXTURE = {
    hashlib.sha256(US_IMAGE).hexdigest(): {
        "fetal_movement": "present",
        "placenta_presence": "anterior",
        "scan_date": "2026-08-23",
        "anomalies": "none seen",
    }
}


@pytest.fixture()
def ctx(schema, lexicon, rules, guideline_index, mock_backend):
    return WorkflowContext(
        schema=schema,
        lexicon=lexicon,
        backend=mock_backend,
        rules=rules,
        retrieval_index=guideline_index,
        ultrasound_extractor=MockUltrasoundExtractor(fixtures=dict(US_FIXTURE)),
    )


def _attach_all(session, ctx, sections=None):
    for section in sections or SectionKind:
        transcript = SectionTranscript.from_text(section, SECTION_TEXTS[section])
        attach_transcript(session, section, transcript, "nurse", ctx)
    return session


def _answer_all_clarifications(session, ctx):
    while session.state == VisitState.CLARIFYING:
        section, ordinal = session.clarification_cursor
        answer_clarification(
            session, ClarificationAnswer(ordinal, "Confirmed."), "doctor", ctx)
    return session


def run_to_red_flag_review(ctx, mr="MR-0001"):
    session = start_visit(mr, "new", ctx, visit_id=f"{mr}-v1",
                          visit_date=VISIT_DATE)
    enter_vitals(session, VITALS, "nurse", ctx)
    _attach_all(session, ctx)
    assert session.state == VisitState.CLARIFYING
    _answer_all_clarifications(session, ctx)
    assert session.state == VisitState.EMR_REVIEW
    finalize_emr(session, [], "doctor", ctx)
    assert session.state == VisitState.MEDICAL_QUESTIONS
    answers = {q.id: "Nothing notable." for q in session.medical_questions}
    complete_medical_questions(session, answers, "doctor", ctx)
    assert session.state == VisitState.RED_FLAG_REVIEW
    return session


def run_full_visit(ctx, mr="MR-0001", want_ultrasound=False):
    session = run_to_red_flag_review(ctx, mr=mr)
    criticals = [f.rule_id for f in session.report.critical_flags()]
    acknowledge_flags(session, criticals, "doctor", ctx)
    save_visit(session, "doctor", ctx, want_ultrasound=want_ultrasound)
    if want_ultrasound:
        attach_ultrasound(session, US_IMAGE, "nurse", ctx)
        confirm_ultrasound(session, True, "doctor", ctx)
    return session


# ---------------------------------------------------------------- lifecycle


def test_full_lifecycle_reaches_finalized(ctx, schema):
    session = run_full_visit(ctx)
    assert session.state == VisitState.FINALIZED
    doc = session.emr
    # Vitals-derived fields override transcription, tagged deterministic.
    assert doc.values["bmi_kg_m2"] == Numeric(37.9, schema.get("bmi_kg_m2").unit)
    assert doc.provenance["bmi_kg_m2"] == PROVENANCE_DETERMINISTIC
    assert doc.values["systolic_bp_mmhg"].value == 150.0
    assert doc.values["weeks_of_gestation"].value == 29.0
    assert doc.values["edd_date"] == Date(dt.date(2026, 11, 8))
    assert doc.provenance["edd_date"] == PROVENANCE_DETERMINISTIC
    # Extraction really ran.
    assert doc.values["hypertension"] == Affirmed()
    assert doc.values["hemoglobin_g_dl"].value == 10.5
    # The report flags low hemoglobin and elevated blood pressure.
    rule_ids = {f.rule_id for f in session.report.flags}
    assert {"hypertension", "obesity", "anemia"} <= rule_ids


def test_event_log_digests_and_monotone_versions(ctx):
    session = run_full_visit(ctx, want_ultrasound=True)
    assert session.version == len(session.event_log)
    for event in session.event_log:
        assert event.digest == payload_digest(event.payload)
    ops = [e.op for e in session.event_log]
    assert ops[0] == "enter_vitals"
    assert ops[-2:] == ["attach_ultrasound", "confirm_ultrasound"]


def test_replay_reproduces_session_exactly(ctx, schema):
    session = run_full_visit(ctx, want_ultrasound=True)
    rebuilt = replay(session.mr_number, session.kind, session.event_log, ctx,
                     visit_id=session.visit_id, visit_date=session.visit_date)
    a = json.dumps(session_snapshot(session, schema), sort_keys=True)
    b = json.dumps(session_snapshot(rebuilt, schema), sort_keys=True)
    assert a == b


def test_replay_from_serialized_events(ctx, schema):
    from matcare.workflow import TransitionEvent
    session = run_full_visit(ctx)
    wire = [e.to_json() for e in session.event_log]
    events = [TransitionEvent.from_json(json.loads(json.dumps(o)))
              for o in wire]
    rebuilt = replay(session.mr_number, session.kind, events, ctx,
                     visit_id=session.visit_id, visit_date=session.visit_date)
    assert json.dumps(session_snapshot(rebuilt, schema), sort_keys=True) == \
        json.dumps(session_snapshot(session, schema), sort_keys=True)


# ---------------------------------------------------------------- ordering


def test_operations_require_their_state(ctx):
    session = start_visit("MR-1", "new", ctx, visit_date=VISIT_DATE)
    transcript = SectionTranscript.from_text(
        SectionKind.FAMILY_HISTORY, SECTION_TEXTS[SectionKind.FAMILY_HISTORY])
    with pytest.raises(WorkflowError):
        attach_transcript(session, SectionKind.FAMILY_HISTORY, transcript,
                          "nurse", ctx)
    with pytest.raises(WorkflowError):
        finalize_emr(session, [], "doctor", ctx)
    with pytest.raises(WorkflowError):
        save_visit(session, "doctor", ctx)


def test_clarifications_answered_strictly_in_order(ctx):
    session = start_visit("MR-1", "new", ctx, visit_date=VISIT_DATE)
    enter_vitals(session, VITALS, "nurse", ctx)
    _attach_all(session, ctx)
    assert session.state == VisitState.CLARIFYING
    section, ordinal = session.clarification_cursor
    assert ordinal == 1
    with pytest.raises(WorkflowError):
        answer_clarification(session, ClarificationAnswer(2, "skip ahead"),
                             "doctor", ctx)
    # The in-order answer is accepted and the cursor advances.
    answer_clarification(session, ClarificationAnswer(1, "Confirmed."),
                         "doctor", ctx)
    assert session.clarification_cursor != (section, 1)


def test_invalid_vitals_rejected(ctx):
    session = start_visit("MR-1", "new", ctx, visit_date=VISIT_DATE)
    with pytest.raises(WorkflowError):
        enter_vitals(session, VitalSigns(systolic_mmHg=80, diastolic_mmHg=120),
                     "nurse", ctx)
    assert session.state == VisitState.REGISTERED
    assert session.event_log == []


def test_start_visit_guards(ctx):
    with pytest.raises(WorkflowError):
        start_visit("MR-1", "walk-in", ctx)
    with pytest.raises(WorkflowError):
        start_visit("MR-1", "returning", ctx)  # no prior record


# ---------------------------------------------------------------- locks


def test_returning_visit_locks_history_sections(ctx, schema):
    first = run_full_visit(ctx)
    prior = first.emr
    session = start_visit("MR-0001", "returning", ctx, visit_id="MR-0001-v2",
                          visit_date=VISIT_DATE, prior=prior)
    enter_vitals(session, VITALS, "nurse", ctx)
    locked = SectionKind.PERSONAL_MEDICAL_HISTORY
    transcript = SectionTranscript.from_text(locked, SECTION_TEXTS[locked])
    with pytest.raises(WorkflowError):
        attach_transcript(session, locked, transcript, "nurse", ctx)
    _attach_all(session, ctx, sections=[SectionKind.PRESENT_PREGNANCY,
                                        SectionKind.PROPOSED_PLAN])
    _answer_all_clarifications(session, ctx)
    assert session.state == VisitState.EMR_REVIEW
    # History values carried forward verbatim from the prior record.
    for fid in ("blood_group_self", "hypertension", "gravida"):
        assert session.emr.values[fid] == prior.values[fid]
    # Edits to locked fields are rejected; unlocked fields are editable.
    with pytest.raises(WorkflowError):
        finalize_emr(session, [("hypertension", Denied())], "doctor", ctx)
    finalize_emr(session, [("presentation", Text("Breech"))], "doctor", ctx)
    assert session.emr.values["presentation"] == Text("Breech")


def test_transcript_section_mismatch_rejected(ctx):
    session = start_visit("MR-1", "new", ctx, visit_date=VISIT_DATE)
    enter_vitals(session, VITALS, "nurse", ctx)
    transcript = SectionTranscript.from_text(
        SectionKind.FAMILY_HISTORY, "Mother has sugar.")
    with pytest.raises(WorkflowError):
        attach_transcript(session, SectionKind.PROPOSED_PLAN, transcript,
                          "nurse", ctx)


# ---------------------------------------------------------------- save gating


def test_save_blocked_until_criticals_acknowledged(ctx):
    session = run_to_red_flag_review(ctx)
    criticals = [f.rule_id for f in session.report.critical_flags()]
    assert criticals, "scenario must produce critical flags"
    with pytest.raises(WorkflowError) as err:
        save_visit(session, "doctor", ctx)
    for rule_id in criticals:
        assert rule_id in str(err.value)
    # Partial acknowledgement is not enough.
    acknowledge_flags(session, criticals[:1], "doctor", ctx)
    if len(criticals) > 1:
        with pytest.raises(WorkflowError):
            save_visit(session, "doctor", ctx)
    acknowledge_flags(session, criticals, "doctor", ctx)
    save_visit(session, "doctor", ctx)
    assert session.state == VisitState.FINALIZED


def test_missing_flags_do_not_block_save(ctx):
    session = run_to_red_flag_review(ctx)
    assert any(f.category == "missing" for f in session.report.flags)
    acknowledge_flags(session, [f.rule_id for f in
                                session.report.critical_flags()], "doctor", ctx)
    save_visit(session, "doctor", ctx)  # missing-info flags left unacked


def test_acknowledge_unknown_flag_rejected(ctx):
    session = run_to_red_flag_review(ctx)
    with pytest.raises(WorkflowError):
        acknowledge_flags(session, ["no_such_rule"], "doctor", ctx)


# ---------------------------------------------------------------- ultrasound


def test_ultrasound_extraction_staged_and_confirmed(ctx, schema):
    session = run_full_visit(ctx, want_ultrasound=True)
    assert session.staged_ultrasound["placenta_presence"] == "anterior"
    note = session.emr.additional_info[SectionKind.PRESENT_PREGNANCY]
    assert "placenta presence: anterior" in note
    assert session.ultrasound_digest == hashlib.sha256(US_IMAGE).hexdigest()


def test_ultrasound_extraction_failure_keeps_image(ctx):
    session = run_to_red_flag_review(ctx)
    acknowledge_flags(session, [f.rule_id for f in
                                session.report.critical_flags()], "doctor", ctx)
    save_visit(session, "doctor", ctx, want_ultrasound=True)
    unknown = b"image with no fixture"
    attach_ultrasound(session, unknown, "nurse", ctx)
    assert session.ultrasound_digest == hashlib.sha256(unknown).hexdigest()
    assert session.staged_ultrasound == {}
    assert any("extraction failed" in w for w in session.warnings)
    confirm_ultrasound(session, False, "doctor", ctx)
    assert session.state == VisitState.FINALIZED


def test_apply_event_rejects_unknown_op(ctx):
    from matcare.workflow import TransitionEvent
    session = start_visit("MR-1", "new", ctx, visit_date=VISIT_DATE)
    bogus = TransitionEvent("teleport", "x", "", VisitState.REGISTERED,
                            VisitState.FINALIZED, {}, payload_digest({}))
    with pytest.raises(WorkflowError):
        apply_event(session, bogus, ctx)
