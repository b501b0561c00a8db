from .backend import BackendError, LlmBackend, MockLlmBackend, parse_blocks
from .contracts import (
    ContractError,
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
    validate_response,
)
from .orchestrator import (
    ClarificationAnswer,
    ClarificationQuestion,
    MAX_REASKS,
    MedicalQuestion,
    OrchestrationError,
    apply_summary_delta,
    generate_clarifications,
    generate_emr,
    generate_medical_questions,
    generate_redflag_narrative,
    parse_clarifications,
    summarize_question_answers,
)
from .prompts import (
    Attachment,
    PromptBundle,
    PromptError,
    build_clarification_prompt,
    build_fill_prompt,
    build_medical_questions_prompt,
    build_red_flags_prompt,
    build_summary_prompt,
    render,
    snippet_id,
)

__all__ = [
    "Attachment",
    "BackendError",
    "ClarificationAnswer",
    "ClarificationQuestion",
    "ContractError",
    "LlmBackend",
    "MAX_REASKS",
    "MedicalQuestion",
    "MockLlmBackend",
    "OrchestrationError",
    "PromptBundle",
    "PromptError",
    "StructuredOutputSchema",
    "TASK_CLARIFY",
    "TASK_FILL_EMR",
    "TASK_MEDICAL_QUESTIONS",
    "TASK_RED_FLAGS",
    "TASK_SUMMARY",
    "apply_summary_delta",
    "build_clarification_prompt",
    "build_fill_prompt",
    "build_medical_questions_prompt",
    "build_red_flags_prompt",
    "build_summary_prompt",
    "clarify_contract",
    "fill_emr_contract",
    "generate_clarifications",
    "generate_emr",
    "generate_medical_questions",
    "generate_redflag_narrative",
    "medical_questions_contract",
    "parse_blocks",
    "parse_clarifications",
    "red_flags_contract",
    "render",
    "snippet_id",
    "summarize_question_answers",
    "summary_contract",
    "validate_response",
]
