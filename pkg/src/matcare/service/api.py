"""Network API for the clinic workflow.

One endpoint per workflow operation. Every mutating call carries the
session version for optimistic concurrency; a stale version gets 409 and
the client retries after refreshing. Visits persist as registration inputs
plus the event log; loading replays the log, so a service restart
reproduces session state exactly.
"""

from __future__ import annotations

import base64
import binascii
import datetime as _dt
import hashlib
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..emr.document import VitalSigns, document_from_json, document_to_json
from ..emr.schema import SectionKind
from ..emr.values import value_from_json
from ..llm.contracts import ContractError
from ..llm.orchestrator import ClarificationAnswer
from ..transcripts import SectionTranscript, TranscriptionError, transcribe_section
from .. import workflow as wf
from .storage import Conflict, NotFound, Store, StorageError

API_BASE = "/api/v1"
MAX_AUDIO_BYTES = 10 * 1024 * 1024


class ServiceState:
    """Store + workflow context + live sessions."""

    def __init__(self, store: Store, ctx: wf.WorkflowContext,
                 speech_backend=None, max_audio_bytes: int = MAX_AUDIO_BYTES):
        self.store = store
        self.ctx = ctx
        self.speech_backend = speech_backend
        self.max_audio_bytes = max_audio_bytes
        self.sessions: Dict[str, wf.VisitSession] = {}

    # -- session lifecycle ---------------------------------------------------

    def open_visit(self, mr_number: str, kind: str, visit_date: str) -> wf.VisitSession:
        self.store.get_patient(mr_number)  # 404 if absent
        existing = self.store.list_visits(mr_number)
        visit_id = f"{mr_number}-v{len(existing) + 1}"
        prior = None
        if kind == "returning":
            prior = self._latest_final_emr(mr_number)
            if prior is None:
                raise wf.WorkflowError(
                    "returning visit requires a previously finalized record")
        session = wf.start_visit(
            mr_number, kind, self.ctx, visit_id=visit_id,
            visit_date=_dt.date.fromisoformat(visit_date), prior=prior)
        self.sessions[visit_id] = session
        self.persist(session)
        return session

    def _latest_final_emr(self, mr_number: str):
        for visit_id in reversed(self.store.list_visits(mr_number)):
            archive = self.store.load_visit(visit_id)
            snapshot = archive["snapshot"]
            if snapshot["state"] == wf.VisitState.FINALIZED.value and \
                    snapshot["emr"] is not None:
                return document_from_json(snapshot["emr"], self.ctx.schema)
        return None

    def session(self, visit_id: str) -> wf.VisitSession:
        if visit_id in self.sessions:
            return self.sessions[visit_id]
        archive = self.store.load_visit(visit_id)
        prior = None
        if archive.get("prior_emr") is not None:
            prior = document_from_json(archive["prior_emr"], self.ctx.schema)
        session = wf.replay(
            archive["mr_number"], archive["kind"],
            [wf.TransitionEvent.from_json(e) for e in archive["events"]],
            self.ctx, visit_id=visit_id,
            visit_date=_dt.date.fromisoformat(archive["visit_date"]),
            prior=prior)
        self.sessions[visit_id] = session
        return session

    def persist(self, session: wf.VisitSession) -> None:
        archive = {
            "mr_number": session.mr_number,
            "visit_id": session.visit_id,
            "kind": session.kind,
            "visit_date": session.visit_date.isoformat(),
            "prior_emr": (document_to_json(session.prior_emr, self.ctx.schema)
                          if session.prior_emr is not None else None),
            "events": [e.to_json() for e in session.event_log],
            "snapshot": wf.session_snapshot(session, self.ctx.schema),
        }
        self.store.save_visit(session.visit_id, session.mr_number, archive)


class PatientIn(BaseModel):
    mr_number: str
    name: str
    age: Optional[int] = None
    care_type: str = "public"


class VisitIn(BaseModel):
    kind: str
    visit_date: str = Field(default_factory=lambda: _dt.date.today().isoformat())


class Mutation(BaseModel):
    version: int
    actor: str = "anonymous"


class VitalsIn(Mutation):
    vitals: dict


class TranscriptIn(Mutation):
    text: Optional[str] = None
    audio_b64: Optional[str] = None


class AnswerIn(Mutation):
    question_id: int
    answer_text: str


class EditsIn(Mutation):
    edits: List[List[object]] = Field(default_factory=list)


class QuestionAnswersIn(Mutation):
    answers: Dict[int, str] = Field(default_factory=dict)


class AcknowledgeIn(Mutation):
    flag_ids: List[str]


class SaveIn(Mutation):
    want_ultrasound: bool = False


class UltrasoundIn(Mutation):
    image_b64: str


class UltrasoundConfirmIn(Mutation):
    accept: bool


class SurveyIn(BaseModel):
    actor: str = "anonymous"
    kind: str  # emr_review | red_flag_review
    responses: Dict[str, object]


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="maternal-care record service")
    app.state.service = state
    ctx = state.ctx

    def snapshot(session: wf.VisitSession) -> dict:
        return wf.session_snapshot(session, ctx.schema)

    def check_version(session: wf.VisitSession, body: Mutation) -> None:
        if body.version != session.version:
            raise HTTPException(
                status_code=409,
                detail={"error": "version_conflict",
                        "expected": session.version,
                        "got": body.version})

    @app.exception_handler(wf.WorkflowError)
    async def _workflow_error(request: Request, exc: wf.WorkflowError):
        return JSONResponse(status_code=400,
                            content={"detail": {"error": str(exc)}})

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return JSONResponse(status_code=404,
                            content={"detail": {"error": str(exc)}})

    @app.exception_handler(Conflict)
    async def _conflict(request: Request, exc: Conflict):
        return JSONResponse(status_code=409,
                            content={"detail": {"error": str(exc)}})

    @app.exception_handler(StorageError)
    async def _storage_error(request: Request, exc: StorageError):
        return JSONResponse(status_code=422,
                            content={"detail": {"error": str(exc)}})

    @app.exception_handler(ContractError)
    async def _contract_error(request: Request, exc: ContractError):
        return JSONResponse(
            status_code=422,
            content={"detail": {"error": str(exc), "path": exc.path}})

    # -- patients --------------------------------------------------------

    @app.post(f"{API_BASE}/patients", status_code=201)
    def create_patient(body: PatientIn):
        record = state.store.create_patient(
            body.mr_number, body.name, body.age, body.care_type)
        return record.to_json()

    @app.get(f"{API_BASE}/patients/{{mr_number}}")
    def get_patient(mr_number: str):
        return state.store.get_patient(mr_number).to_json()

    # -- visit lifecycle ---------------------------------------------------

    @app.post(f"{API_BASE}/patients/{{mr_number}}/visits", status_code=201)
    def open_visit(mr_number: str, body: VisitIn):
        session = state.open_visit(mr_number, body.kind, body.visit_date)
        return snapshot(session)

    @app.get(f"{API_BASE}/visits/{{visit_id}}")
    def get_visit(visit_id: str):
        return snapshot(state.session(visit_id))

    @app.post(f"{API_BASE}/visits/{{visit_id}}/vitals")
    def enter_vitals(visit_id: str, body: VitalsIn):
        session = state.session(visit_id)
        check_version(session, body)
        vitals = VitalSigns.from_json(body.vitals)
        wf.enter_vitals(session, vitals, body.actor, ctx,
                        timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.post(f"{API_BASE}/visits/{{visit_id}}/sections/{{section}}/transcript")
    def upload_section(visit_id: str, section: str, body: TranscriptIn):
        session = state.session(visit_id)
        check_version(session, body)
        try:
            section_kind = SectionKind(section)
        except ValueError:
            raise HTTPException(status_code=404,
                                detail={"error": f"unknown section {section}"})
        if body.text is not None:
            transcript = SectionTranscript.from_text(section_kind, body.text)
        elif body.audio_b64 is not None:
            if state.speech_backend is None:
                raise HTTPException(
                    status_code=422,
                    detail={"error": "no speech backend configured; "
                                     "submit text instead"})
            try:
                audio = base64.b64decode(body.audio_b64, validate=True)
            except (binascii.Error, ValueError):
                raise HTTPException(status_code=422,
                                    detail={"error": "invalid base64 audio"})
            if len(audio) > state.max_audio_bytes:
                raise HTTPException(
                    status_code=413,
                    detail={"error": "audio exceeds limit",
                            "limit_bytes": state.max_audio_bytes})
            state.store.put_blob(audio)
            try:
                transcript = transcribe_section(
                    audio, state.speech_backend, section_kind)
            except TranscriptionError as exc:
                raise HTTPException(status_code=422,
                                    detail={"error": str(exc)})
        else:
            raise HTTPException(
                status_code=422,
                detail={"error": "either text or audio_b64 is required"})
        wf.attach_transcript(session, section_kind, transcript, body.actor,
                             ctx, timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.get(f"{API_BASE}/visits/{{visit_id}}/clarifications")
    def get_clarifications(visit_id: str):
        session = state.session(visit_id)
        snap = snapshot(session)
        return {"clarifications": snap["clarifications"],
                "cursor": snap["clarification_cursor"],
                "version": session.version}

    @app.post(f"{API_BASE}/visits/{{visit_id}}/clarifications/answer")
    def answer_clarification(visit_id: str, body: AnswerIn):
        session = state.session(visit_id)
        check_version(session, body)
        wf.answer_clarification(
            session, ClarificationAnswer(body.question_id, body.answer_text),
            body.actor, ctx, timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.get(f"{API_BASE}/visits/{{visit_id}}/emr")
    def get_emr(visit_id: str):
        session = state.session(visit_id)
        snap = snapshot(session)
        return {"emr": snap["emr"], "version": session.version,
                "state": snap["state"]}

    @app.post(f"{API_BASE}/visits/{{visit_id}}/emr/finalize")
    def finalize_emr(visit_id: str, body: EditsIn):
        session = state.session(visit_id)
        check_version(session, body)
        try:
            edits = [(str(fid), value_from_json(raw, path=f"edits.{fid}"))
                     for fid, raw in body.edits]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"error": str(exc)})
        wf.finalize_emr(session, edits, body.actor, ctx, timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.get(f"{API_BASE}/visits/{{visit_id}}/questions")
    def get_questions(visit_id: str):
        session = state.session(visit_id)
        snap = snapshot(session)
        return {"medical_questions": snap["medical_questions"],
                "version": session.version}

    @app.post(f"{API_BASE}/visits/{{visit_id}}/questions/complete")
    def complete_questions(visit_id: str, body: QuestionAnswersIn):
        session = state.session(visit_id)
        check_version(session, body)
        wf.complete_medical_questions(session, dict(body.answers), body.actor,
                                      ctx, timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.get(f"{API_BASE}/visits/{{visit_id}}/report")
    def get_report(visit_id: str):
        session = state.session(visit_id)
        snap = snapshot(session)
        return {"report": snap["report"],
                "acknowledgements": snap["acknowledgements"],
                "version": session.version}

    @app.post(f"{API_BASE}/visits/{{visit_id}}/flags/acknowledge")
    def acknowledge(visit_id: str, body: AcknowledgeIn):
        session = state.session(visit_id)
        check_version(session, body)
        wf.acknowledge_flags(session, body.flag_ids, body.actor, ctx,
                             timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.post(f"{API_BASE}/visits/{{visit_id}}/save")
    def save_visit(visit_id: str, body: SaveIn):
        session = state.session(visit_id)
        check_version(session, body)
        wf.save_visit(session, body.actor, ctx, timestamp=_now(),
                      want_ultrasound=body.want_ultrasound)
        state.persist(session)
        return snapshot(session)

    @app.post(f"{API_BASE}/visits/{{visit_id}}/ultrasound")
    def attach_ultrasound(visit_id: str, body: UltrasoundIn):
        session = state.session(visit_id)
        check_version(session, body)
        try:
            image = base64.b64decode(body.image_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=422,
                                detail={"error": "invalid base64 image"})
        state.store.put_blob(image)
        wf.attach_ultrasound(session, image, body.actor, ctx,
                             timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.post(f"{API_BASE}/visits/{{visit_id}}/ultrasound/confirm")
    def confirm_ultrasound(visit_id: str, body: UltrasoundConfirmIn):
        session = state.session(visit_id)
        check_version(session, body)
        wf.confirm_ultrasound(session, body.accept, body.actor, ctx,
                              timestamp=_now())
        state.persist(session)
        return snapshot(session)

    @app.post(f"{API_BASE}/visits/{{visit_id}}/surveys", status_code=201)
    def submit_survey(visit_id: str, body: SurveyIn):
        state.session(visit_id)  # 404 if unknown
        if body.kind not in ("emr_review", "red_flag_review"):
            raise HTTPException(status_code=422,
                                detail={"error": f"unknown survey kind "
                                                 f"{body.kind!r}"})
        state.store.add_survey(visit_id, body.kind, {
            "actor": body.actor, "responses": body.responses})
        return {"ok": True}

    @app.get(f"{API_BASE}/visits/{{visit_id}}/export")
    def export_visit(visit_id: str, anonymize: bool = False):
        archive = dict(state.store.load_visit(visit_id))
        archive["surveys"] = state.store.get_surveys(visit_id)
        patient = state.store.get_patient(archive["mr_number"]).to_json()
        if anonymize:
            patient["name"] = _pseudonym(patient["mr_number"])
        archive["patient"] = patient
        return archive

    return app


def _pseudonym(mr_number: str) -> str:
    digest = hashlib.sha256(mr_number.encode("utf-8")).hexdigest()
    return f"Patient-{digest[:8]}"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
