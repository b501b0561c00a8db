"""Generation orchestration: prompts, contracts, defaulting, and re-asks."""

import json
import random

import pytest

from matcare.emr.document import PROVENANCE_LLM, blank_document
from matcare.emr.schema import SectionKind
from matcare.emr.values import (
    Affirmed,
    Denied,
    KIND_TRISTATE,
    NoInformation,
    Numeric,
    Text,
    values_equal,
)
from matcare.llm import (
    BackendError,
    ClarificationAnswer,
    ContractError,
    MockLlmBackend,
    OrchestrationError,
    apply_summary_delta,
    build_fill_prompt,
    clarify_contract,
    fill_emr_contract,
    generate_clarifications,
    generate_emr,
    generate_medical_questions,
    generate_redflag_narrative,
    parse_clarifications,
    red_flags_contract,
    render,
    summarize_question_answers,
    validate_response,
)
from matcare.retrieval import Snippet
from matcare.rules import ThresholdRuleSet
from matcare.transcripts import SectionTranscript


def _transcript(section, text):
    return SectionTranscript.from_text(section, text)


HISTORY_TEXT = (
    "Patient blood group is B positive. Gravida 2 para 1. "
    "She has a history of hypertension. Surgical history is not significant. "
    "She is taking Tablet Loprin. No information about contraceptives."
)


# ---------------------------------------------------------------- prompts


def test_prompt_rendering_deterministic(schema, lexicon):
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    a = render(build_fill_prompt([t], [], schema, lexicon))
    b = render(build_fill_prompt([t], [], schema, lexicon))
    assert a == b


def test_lexicon_excerpt_contains_only_relevant_entries(schema, lexicon):
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY,
                    "patient has sugar, nothing else notable")
    text = render(build_fill_prompt([t], [], schema, lexicon))
    lexicon_block = text.split("== LEXICON ==")[1].split("==")[0]
    assert "sugar" in lexicon_block
    # An entry absent from the transcript must not be included.
    assert "duphaston" not in lexicon_block.casefold()


# ---------------------------------------------------------------- contracts


def _corrupt(obj, rng):
    """Return a structurally damaged copy of a JSON-like object."""
    choice = rng.randrange(6)
    if choice == 0:
        return None
    if choice == 1:
        return [obj]
    if choice == 2:
        return {"unexpected_key": 1, **({} if not isinstance(obj, dict) else obj)}
    if isinstance(obj, dict) and obj:
        key = rng.choice(list(obj))
        out = dict(obj)
        if choice == 3:
            del out[key]
        elif choice == 4:
            out[key] = 42
        else:
            out[key] = _corrupt(out[key], rng)
        return out
    return "garbage"


def test_fuzzed_malformed_responses_rejected_never_crash(schema):
    contract = fill_emr_contract(schema)
    good = {"fields": {"diabetes": {"type": "denied"}},
            "additional_info": {}}
    validate_response(good, contract)  # sanity: the seed object is valid
    rng = random.Random(99)
    rejected = 0
    for _ in range(300):
        bad = _corrupt(json.loads(json.dumps(good)), rng)
        try:
            validate_response(bad, contract)
        except ContractError:
            rejected += 1
    # Corruption can occasionally produce an equivalent-valid object;
    # the overwhelming majority must be rejected, and none may crash.
    assert rejected >= 250


def test_contract_rejects_unknown_field_and_bad_value(schema):
    contract = fill_emr_contract(schema)
    with pytest.raises(ContractError):
        validate_response({"fields": {"not_a_field": {"type": "denied"}},
                           "additional_info": {}}, contract)
    with pytest.raises(ContractError):
        validate_response({"fields": {"gravida": {"type": "affirmed"}},
                           "additional_info": {}}, contract)
    with pytest.raises(ContractError):
        validate_response({"fields": {"lmp_date":
                                      {"type": "date", "value": "01-02-2026"}},
                           "additional_info": {}}, contract)


# ---------------------------------------------------------------- clarify


def test_clarifications_from_transcript(schema, lexicon, mock_backend):
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    questions = generate_clarifications(t, schema, lexicon, mock_backend)
    assert [q.id for q in questions] == list(range(1, len(questions) + 1))
    texts = " ".join(q.question_text for q in questions)
    assert "Loprin" in texts
    assert "hypertension" in texts
    kinds = {q.kind for q in questions}
    assert kinds <= {"misspelling", "confirmation", "missing"}


def test_parse_clarifications_rejects_gap_in_ordinals():
    response = {"questions": [
        {"id": 1, "question_text": "q1", "kind": "confirmation"},
        {"id": 3, "question_text": "q3", "kind": "confirmation"},
    ]}
    with pytest.raises(ContractError):
        parse_clarifications(response, clarify_contract())


def test_clarifications_reject_unknown_target_field(schema, lexicon, mock_backend):
    mock_backend.canned_responses["clarify"] = {"questions": [
        {"id": 1, "question_text": "q", "kind": "confirmation",
         "target_field_ids": ["no_such_field"]},
    ]}
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    with pytest.raises(ContractError):
        generate_clarifications(t, schema, lexicon, mock_backend)


# ---------------------------------------------------------------- fill


def test_generate_emr_extraction_and_defaults(schema, lexicon, mock_backend):
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    doc = generate_emr([t], [], schema, lexicon, mock_backend)
    assert values_equal(doc.values["blood_group_self"], Text("B positive"))
    assert doc.values["hypertension"] == Affirmed()
    assert doc.values["surgical_history"] == Denied()
    # Explicit "no information" stays NoInformation despite coverage.
    assert doc.values["contraceptives"] == NoInformation()
    # Unmentioned yes/no fields in the covered section default to Denied.
    assert doc.values["diabetes"] == Denied()
    assert doc.provenance["diabetes"] == PROVENANCE_LLM
    # Sections without a transcript are untouched.
    assert doc.values["edema"] == NoInformation()
    assert doc.values["family_diabetes"] == NoInformation()


def test_defaulting_rule_exhaustive_over_tristates(schema, lexicon, mock_backend):
    t = _transcript(SectionKind.FAMILY_HISTORY, "Mother has sugar.")
    doc = generate_emr([t], [], schema, lexicon, mock_backend)
    for spec in schema.specs:
        if spec.kind != KIND_TRISTATE:
            continue
        value = doc.values[spec.id]
        if spec.section == SectionKind.FAMILY_HISTORY:
            if spec.id == "family_diabetes":
                assert value == Affirmed()
            else:
                assert value == Denied(), spec.id
        else:
            assert value == NoInformation(), spec.id


def test_husband_side_disambiguation(schema, lexicon, mock_backend):
    t = _transcript(SectionKind.FAMILY_HISTORY,
                    "Mother has sugar. Husband's father has hypertension.")
    doc = generate_emr([t], [], schema, lexicon, mock_backend)
    assert doc.values["family_diabetes"] == Affirmed()
    assert doc.values["husband_family_diabetes"] == Denied()
    assert doc.values["husband_family_hypertension"] == Affirmed()
    assert doc.values["family_hypertension"] == Denied()


def test_off_template_content_lands_in_additional_info(schema, lexicon,
                                                       mock_backend):
    t = _transcript(SectionKind.SOCIO_ECONOMIC_HISTORY,
                    "Patient walks 2 km daily.")
    doc = generate_emr([t], [], schema, lexicon, mock_backend)
    assert "walks 2 km daily" in \
        doc.additional_info[SectionKind.SOCIO_ECONOMIC_HISTORY]


def test_clarification_answers_feed_extraction(schema, lexicon, mock_backend):
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY,
                    "Routine first visit, nothing remarkable.")
    answers = [ClarificationAnswer(1, "Hemoglobin is 10.5 g/dl")]
    doc = generate_emr([t], answers, schema, lexicon, mock_backend)
    assert isinstance(doc.values["hemoglobin_g_dl"], Numeric)
    assert doc.values["hemoglobin_g_dl"].value == 10.5


def test_reask_is_terminal_after_two_retries(schema, lexicon, mock_backend):
    calls = []
    original = mock_backend.complete

    def counting(prompt_text, contract):
        calls.append(contract.task)
        return original(prompt_text, contract)

    mock_backend.canned_responses["fill_emr"] = {"fields": "not an object"}
    mock_backend.complete = counting
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    with pytest.raises(OrchestrationError):
        generate_emr([t], [], schema, lexicon, mock_backend)
    assert calls.count("fill_emr") == 3  # initial attempt + two re-asks


def test_backend_transport_error_propagates(schema, lexicon, mock_backend):
    def failing(prompt_text, contract):
        raise BackendError("connection reset")

    mock_backend.complete = failing
    t = _transcript(SectionKind.PERSONAL_MEDICAL_HISTORY, HISTORY_TEXT)
    with pytest.raises(BackendError):
        generate_emr([t], [], schema, lexicon, mock_backend)


# ---------------------------------------------------------------- questions


def _doc_with(schema, **values):
    doc = blank_document(schema)
    for fid, value in values.items():
        doc.values[fid] = value
        doc.provenance[fid] = PROVENANCE_LLM
    return doc


def test_medical_questions_respect_document_state(schema, mock_backend):
    doc = _doc_with(schema, consanguineous_marriage=Affirmed(),
                    husband_blood_group=Text("O positive"))
    questions = generate_medical_questions(doc, schema, mock_backend)
    assert 3 <= len(questions) <= 7
    texts = " ".join(q.question_text for q in questions)
    # Populated field: asking for the husband's blood group is redundant.
    assert "husband's blood group" not in texts
    # Affirmed consanguinity unlocks the inherited-disease question.
    assert "consanguineous" in texts
    for q in questions:
        for fid in q.rationale_field_ids:
            assert schema.get(fid) is not None


def test_medical_questions_count_enforced(schema, mock_backend):
    mock_backend.canned_responses["medical_questions"] = {"questions": [
        {"id": 1, "question_text": "only one"},
    ]}
    with pytest.raises(OrchestrationError):
        generate_medical_questions(blank_document(schema), schema, mock_backend)


def test_summary_skips_unanswered_and_backend(schema, mock_backend):
    doc = blank_document(schema)
    questions = generate_medical_questions(doc, schema, mock_backend)
    # Nothing answered: no delta, and the backend must not be consulted.
    def exploding(prompt_text, contract):
        raise AssertionError("backend consulted with no answers")
    backend2 = MockLlmBackend(schema=schema, lexicon=None)
    backend2.complete = exploding
    assert summarize_question_answers(
        doc, [(q, "") for q in questions], schema, backend2) == {}

    qa = [(q, "Walks daily and eats a balanced diet."
           if "diet" in q.question_text else "") for q in questions]
    delta = summarize_question_answers(doc, qa, schema, mock_backend)
    assert set(delta) == {SectionKind.SOCIO_ECONOMIC_HISTORY}
    assert "balanced diet" in delta[SectionKind.SOCIO_ECONOMIC_HISTORY]

    updated = apply_summary_delta(doc, delta)
    assert "balanced diet" in \
        updated.additional_info[SectionKind.SOCIO_ECONOMIC_HISTORY]
    assert doc.additional_info[SectionKind.SOCIO_ECONOMIC_HISTORY] == ""


# ---------------------------------------------------------------- red flags


def test_redflag_narrative_cites_provided_snippets(schema, rules, mock_backend):
    doc = _doc_with(schema, hypertension=Affirmed(),
                    bmi_kg_m2=Numeric(34.0, unit=schema.get("bmi_kg_m2").unit))
    snippets = [
        Snippet("gl-htn", (0, 40),
                "Keep readings at 135/85 mmHg or less on treatment.", 2.0),
        Snippet("gl-obesity", (10, 60),
                "A nutritional plan is advised for obesity in pregnancy.", 1.5),
    ]
    flags = generate_redflag_narrative(doc, schema, rules, snippets,
                                       mock_backend)
    assert flags, "expected narrative candidates"
    known = {"gl-htn:0-40", "gl-obesity:10-60"}
    for flag in flags:
        assert flag.source == "llm"
        assert set(flag.snippet_ids) <= known
    by_id = {f.rule_id: f for f in flags}
    assert by_id["hypertension"].snippet_ids == ("gl-htn:0-40",)
    assert by_id["obesity"].snippet_ids == ("gl-obesity:10-60",)


def test_redflag_narrative_rejects_unknown_citation(schema, rules, mock_backend):
    mock_backend.canned_responses["red_flags"] = {"candidates": [
        {"category": "critical", "rule_id": "obesity", "title": "t",
         "detail": "d", "snippet_ids": ["nonexistent:0-1"]},
    ]}
    with pytest.raises(ContractError):
        generate_redflag_narrative(blank_document(schema), schema, rules, [],
                                   mock_backend)


def test_redflag_contract_rejects_bad_category():
    with pytest.raises(ContractError):
        validate_response({"candidates": [
            {"category": "fatal", "rule_id": "x", "title": "t", "detail": "d"},
        ]}, red_flags_contract())
