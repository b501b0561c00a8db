"""Structured-output contracts for language-model responses.

Every backend response is validated against its contract before anything
downstream touches it; an invalid response is rejected wholesale with the
offending key path.
"""

from __future__ import annotations

from dataclasses import dataclass

import jsonschema

from ..emr.schema import EMRSchema, SectionKind
from ..emr.values import (
    KIND_DATE,
    KIND_NUMERIC,
    KIND_ORDINAL,
    KIND_TEXT,
    KIND_TRISTATE,
)

TASK_CLARIFY = "clarify"
TASK_FILL_EMR = "fill_emr"
TASK_MEDICAL_QUESTIONS = "medical_questions"
TASK_SUMMARY = "summary"
TASK_RED_FLAGS = "red_flags"


class ContractError(ValueError):
    """Response failed its structured-output contract."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class StructuredOutputSchema:
    task: str
    json_schema: dict


def validate_response(obj, contract: StructuredOutputSchema) -> None:
    validator = jsonschema.Draft202012Validator(contract.json_schema)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ContractError(first.message, path=first.json_path)


_NO_INFORMATION = {"type": "object",
                   "properties": {"type": {"const": "no_information"}},
                   "required": ["type"]}

_VALUE_SCHEMAS = {
    KIND_TRISTATE: {
        "oneOf": [
            {"type": "object",
             "properties": {"type": {"const": "affirmed"},
                            "detail": {"type": "string"}},
             "required": ["type"], "additionalProperties": False},
            {"type": "object", "properties": {"type": {"const": "denied"}},
             "required": ["type"], "additionalProperties": False},
            _NO_INFORMATION,
        ]
    },
    KIND_TEXT: {
        "oneOf": [
            {"type": "object",
             "properties": {"type": {"const": "text"}, "value": {"type": "string"}},
             "required": ["type", "value"], "additionalProperties": False},
            _NO_INFORMATION,
        ]
    },
    KIND_NUMERIC: {
        "oneOf": [
            {"type": "object",
             "properties": {"type": {"const": "numeric"},
                            "value": {"type": "number"},
                            "unit": {"type": "string"}},
             "required": ["type", "value", "unit"], "additionalProperties": False},
            _NO_INFORMATION,
        ]
    },
    KIND_DATE: {
        "oneOf": [
            {"type": "object",
             "properties": {"type": {"const": "date"},
                            "value": {"type": "string",
                                      "pattern": r"^\d{4}-\d{2}-\d{2}$"}},
             "required": ["type", "value"], "additionalProperties": False},
            _NO_INFORMATION,
        ]
    },
    KIND_ORDINAL: {
        "oneOf": [
            {"type": "object",
             "properties": {"type": {"const": "ordinal"},
                            "grade": {"enum": ["negative", "trace", "plus1",
                                               "plus2", "plus3", "plus4"]}},
             "required": ["type", "grade"], "additionalProperties": False},
            _NO_INFORMATION,
        ]
    },
}


def clarify_contract() -> StructuredOutputSchema:
    return StructuredOutputSchema(TASK_CLARIFY, {
        "type": "object",
        "properties": {
            "questions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "id": {"type": "integer", "minimum": 1},
                        "question_text": {"type": "string", "minLength": 1},
                        "target_field_ids": {"type": "array",
                                             "items": {"type": "string"}},
                        "kind": {"enum": ["misspelling", "confirmation", "missing"]},
                    },
                    "required": ["id", "question_text", "kind"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["questions"],
        "additionalProperties": False,
    })


def fill_emr_contract(schema: EMRSchema) -> StructuredOutputSchema:
    """Contract whose field map mirrors the EMR schema exactly."""
    properties = {
        spec.id: _VALUE_SCHEMAS[spec.kind] for spec in schema.specs
    }
    return StructuredOutputSchema(TASK_FILL_EMR, {
        "type": "object",
        "properties": {
            "fields": {
                "type": "object",
                "properties": properties,
                "additionalProperties": False,
            },
            "additional_info": {
                "type": "object",
                "properties": {s.value: {"type": "string"} for s in SectionKind},
                "additionalProperties": False,
            },
        },
        "required": ["fields", "additional_info"],
        "additionalProperties": False,
    })


def medical_questions_contract() -> StructuredOutputSchema:
    return StructuredOutputSchema(TASK_MEDICAL_QUESTIONS, {
        "type": "object",
        "properties": {
            "questions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "id": {"type": "integer", "minimum": 1},
                        "question_text": {"type": "string", "minLength": 1},
                        "rationale_field_ids": {"type": "array",
                                                "items": {"type": "string"}},
                        "section": {"enum": [s.value for s in SectionKind]},
                    },
                    "required": ["id", "question_text"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["questions"],
        "additionalProperties": False,
    })


def summary_contract() -> StructuredOutputSchema:
    return StructuredOutputSchema(TASK_SUMMARY, {
        "type": "object",
        "properties": {
            "sections": {
                "type": "object",
                "properties": {s.value: {"type": "string"} for s in SectionKind},
                "additionalProperties": False,
            }
        },
        "required": ["sections"],
        "additionalProperties": False,
    })


def red_flags_contract() -> StructuredOutputSchema:
    return StructuredOutputSchema(TASK_RED_FLAGS, {
        "type": "object",
        "properties": {
            "candidates": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "category": {"enum": ["critical", "missing"]},
                        "rule_id": {"type": "string", "minLength": 1},
                        "title": {"type": "string", "minLength": 1},
                        "detail": {"type": "string", "minLength": 1},
                        "snippet_ids": {"type": "array",
                                        "items": {"type": "string"}},
                    },
                    "required": ["category", "rule_id", "title", "detail"],
                    "additionalProperties": False,
                },
            }
        },
        "required": ["candidates"],
        "additionalProperties": False,
    })
