import { describe, expect, it } from "vitest";

import {
  deriveScreenModel,
  enabledClarificationInputs,
} from "../src/screen.js";
import { renderScreen } from "../src/render.js";
import { canonicalJson } from "../src/canonical.js";
import { SECTIONS } from "../src/types.js";
import type { VisitSnapshot } from "../src/types.js";

function baseSnapshot(overrides: Partial<VisitSnapshot>): VisitSnapshot {
  const status = Object.fromEntries(
    SECTIONS.map((s) => [s, "pending"]),
  ) as VisitSnapshot["section_status"];
  return {
    mr_number: "MR-1",
    visit_id: "v1",
    kind: "new",
    visit_date: "2026-08-23",
    state: "recording",
    version: 3,
    section_status: status,
    locked_sections: [],
    vitals: null,
    clarification_cursor: null,
    clarifications: {},
    medical_questions: [],
    emr: null,
    report: null,
    acknowledgements: [],
    ultrasound_digest: null,
    staged_ultrasound: {},
    warnings: [],
    event_log: [],
    ...overrides,
  };
}

describe("clarification screen", () => {
  const snapshot = baseSnapshot({
    state: "clarifying",
    clarification_cursor: ["personal_medical_history", 2],
    clarifications: {
      personal_medical_history: [
        { id: 1, question_text: "Q1?", target_field_ids: [], kind: "confirmation" },
        { id: 2, question_text: "Q2?", target_field_ids: [], kind: "confirmation" },
        { id: 3, question_text: "Q3?", target_field_ids: [], kind: "confirmation" },
      ],
      family_history: [
        { id: 1, question_text: "F1?", target_field_ids: [], kind: "confirmation" },
      ],
    },
  });

  it("enables exactly the cursor question", () => {
    const model = deriveScreenModel(snapshot);
    const enabled = enabledClarificationInputs(model);
    expect(enabled).toHaveLength(1);
    expect(enabled[0]).toMatchObject({
      section: "personal_medical_history",
      questionId: 2,
    });
    // Question 3 cannot be answered before question 2.
    const later = model.clarificationInputs.find((i) => i.questionId === 3);
    expect(later?.enabled).toBe(false);
  });

  it("renders disabled inputs for every non-cursor question", () => {
    const html = renderScreen(deriveScreenModel(snapshot));
    expect(html).toContain('data-question="2">');
    expect(html).toContain('data-question="1" disabled>');
    expect(html).toContain('data-question="3" disabled>');
  });
});

describe("save gating", () => {
  const report = {
    doc_ref: "d",
    rules_version: "v1",
    flags: [
      {
        category: "critical" as const,
        rule_id: "hypertension",
        title: "High BP",
        detail: "150/95",
        source: "deterministic",
        severity_display: "red" as const,
        snippet_ids: [],
      },
      {
        category: "missing" as const,
        rule_id: "missing:urine_albumin",
        title: "Urine albumin not recorded",
        detail: "",
        source: "deterministic",
        severity_display: "yellow" as const,
        snippet_ids: [],
      },
    ],
  };

  it("disables save and lists unacknowledged criticals", () => {
    const model = deriveScreenModel(
      baseSnapshot({ state: "red_flag_review", report }),
    );
    expect(model.saveGate.enabled).toBe(false);
    expect(model.saveGate.blockingFlagIds).toEqual(["hypertension"]);
    const html = renderScreen(model);
    expect(html).toContain('class="save" disabled');
    expect(html).toContain('data-blocking="hypertension"');
  });

  it("enables save once criticals are acknowledged; missing never blocks", () => {
    const model = deriveScreenModel(
      baseSnapshot({
        state: "red_flag_review",
        report,
        acknowledgements: ["hypertension"],
      }),
    );
    expect(model.saveGate.enabled).toBe(true);
    expect(model.saveGate.blockingFlagIds).toEqual([]);
  });

  it("uses server severity for red/yellow highlighting", () => {
    const html = renderScreen(
      deriveScreenModel(baseSnapshot({ state: "red_flag_review", report })),
    );
    expect(html).toContain('class="flag red" data-rule="hypertension"');
    expect(html).toContain(
      'class="flag yellow" data-rule="missing:urine_albumin"',
    );
  });
});

describe("section locking", () => {
  it("disables recording for locked sections of returning visits", () => {
    const model = deriveScreenModel(
      baseSnapshot({
        kind: "returning",
        locked_sections: ["personal_medical_history", "family_history"],
      }),
    );
    const rows = Object.fromEntries(
      model.sections.map((row) => [row.section, row]),
    );
    expect(rows["personal_medical_history"].recordingEnabled).toBe(false);
    expect(rows["present_pregnancy"].recordingEnabled).toBe(true);
    const html = renderScreen(model);
    expect(html).toContain('class="section locked"');
  });
});

describe("canonical JSON", () => {
  it("is key-order independent and stable", () => {
    expect(canonicalJson({ b: 1, a: [{ d: null, c: "x" }] })).toBe(
      canonicalJson({ a: [{ c: "x", d: null }], b: 1 }),
    );
    expect(canonicalJson({ a: 1 })).toBe('{"a":1}');
  });
});
