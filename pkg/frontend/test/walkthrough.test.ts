/** End-to-end console walkthrough against a live offline service instance
 * (mock speech + mock language-model backends), compared byte-for-byte
 * with an API-only walkthrough that bypasses every UI layer. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const testDir = dirname(fileURLToPath(import.meta.url));

import { ApiClient } from "../src/api.js";
import { canonicalJson } from "../src/canonical.js";
import { runScriptedWalkthrough } from "../src/walkthrough.js";
import type { WalkthroughScript } from "../src/walkthrough.js";
import { SECTIONS } from "../src/types.js";
import type { Section, VisitSnapshot } from "../src/types.js";

const PORT = 8977;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workDir: string;
let sectionAudio: Record<Section, string>;

const VITALS = {
  height_cm: 154,
  weight_kg: 90,
  systolic_mmHg: 150,
  diastolic_mmHg: 95,
  temperature_C: 37.0,
  pulse_bpm: 80,
};

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-test-"));
  const wavDir = join(workDir, "wavs");
  server = spawn(
    "python3",
    [join(testDir, "server.py"), String(PORT), join(workDir, "data"), wavDir],
    { stdio: "inherit" },
  );
  // Wait for the service to accept requests.
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/openapi.json`);
      if (response.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error("service did not start");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  sectionAudio = Object.fromEntries(
    SECTIONS.map((section) => [
      section,
      readFileSync(join(wavDir, `${section}.wav`)).toString("base64"),
    ]),
  ) as Record<Section, string>;
}, 60_000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

function script(mrNumber: string): WalkthroughScript {
  return {
    mrNumber,
    patientName: "Amina",
    visitDate: "2026-08-23",
    vitals: VITALS,
    sectionAudio,
    clarificationAnswer: "Confirmed.",
    questionAnswer: "Nothing notable.",
    emrSurvey: { ease_of_use: 5, comments: "clear" },
    flagSurvey: { usefulness: 5, comments: "actionable" },
  };
}

/** Criterion-style walkthrough using raw HTTP only — no view models, no
 * controller, no rendering. */
async function apiOnlyWalkthrough(mrNumber: string): Promise<VisitSnapshot> {
  const post = async (path: string, body: unknown): Promise<any> => {
    const response = await fetch(`${BASE}/api/v1${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new Error(`${path}: ${JSON.stringify(payload)}`);
    }
    return payload;
  };

  await post("/patients", { mr_number: mrNumber, name: "Amina" });
  let snap = await post(`/patients/${mrNumber}/visits`, {
    kind: "new",
    visit_date: "2026-08-23",
  });
  const visit = snap.visit_id;
  snap = await post(`/visits/${visit}/vitals`, {
    version: snap.version,
    vitals: VITALS,
  });
  for (const section of SECTIONS) {
    snap = await post(`/visits/${visit}/sections/${section}/transcript`, {
      version: snap.version,
      audio_b64: sectionAudio[section],
    });
  }
  while (snap.state === "clarifying") {
    const [, questionId] = snap.clarification_cursor;
    snap = await post(`/visits/${visit}/clarifications/answer`, {
      version: snap.version,
      question_id: questionId,
      answer_text: "Confirmed.",
    });
  }
  snap = await post(`/visits/${visit}/emr/finalize`, {
    version: snap.version,
    edits: [],
  });
  const answers: Record<number, string> = {};
  for (const question of snap.medical_questions) {
    answers[question.id] = "Nothing notable.";
  }
  snap = await post(`/visits/${visit}/questions/complete`, {
    version: snap.version,
    answers,
  });
  const criticals = snap.report.flags
    .filter((f: { category: string }) => f.category === "critical")
    .map((f: { rule_id: string }) => f.rule_id);
  snap = await post(`/visits/${visit}/flags/acknowledge`, {
    version: snap.version,
    flag_ids: criticals,
  });
  snap = await post(`/visits/${visit}/save`, {
    version: snap.version,
    want_ultrasound: false,
  });
  return snap as VisitSnapshot;
}

describe("scripted console walkthrough", () => {
  it("completes the seven-step flow with correct UI gating and persists a record byte-identical to the API-only walkthrough", async () => {
    const api = new ApiClient({ baseUrl: BASE, actor: "dr-console" });
    const { steps, final } = await runScriptedWalkthrough(api, script("MR-UI"));

    // Linear clarification: at every step with pending clarifications,
    // exactly one input is enabled, and it is the cursor question.
    const clarifying = steps.filter((m) => m.screen === "clarifying");
    expect(clarifying.length).toBeGreaterThan(0);
    for (const model of clarifying) {
      const enabled = model.clarificationInputs.filter((i) => i.enabled);
      expect(enabled).toHaveLength(1);
    }

    // Save gating: red-flag review starts disabled with the blocking
    // criticals listed, and is enabled exactly when they are acknowledged.
    const review = steps.filter((m) => m.screen === "red_flag_review");
    expect(review.length).toBeGreaterThanOrEqual(2);
    expect(review[0].saveGate.enabled).toBe(false);
    expect(review[0].saveGate.blockingFlagIds).toContain("hypertension");
    expect(review[review.length - 1].saveGate.enabled).toBe(true);

    // Red/yellow highlighting mirrors the service severities.
    const lastReview = review[review.length - 1];
    expect(lastReview.flags.some((f) => f.highlight === "red")).toBe(true);

    expect(final.state).toBe("finalized");

    // The finalized visit appears in the patient's history.
    const patient = await api.getPatient("MR-UI");
    expect(patient.visit_ids).toContain(final.visit_id);
    const reloaded = await api.getVisit(final.visit_id);
    expect(reloaded.state).toBe("finalized");

    // Byte-identity: the persisted clinical record from the console
    // walkthrough equals the raw API-only walkthrough byte for byte.
    const apiFinal = await apiOnlyWalkthrough("MR-API");
    expect(final.emr).not.toBeNull();
    expect(canonicalJson(final.emr)).toBe(canonicalJson(apiFinal.emr));
    // The report matches too, except doc_ref which names the visit itself.
    expect(canonicalJson(final.report?.flags)).toBe(
      canonicalJson(apiFinal.report?.flags),
    );

    // The console computed nothing clinical: deterministic values came
    // from the service (BMI from vitals, for example).
    const emr = final.emr as {
      sections: { fields: { id: string; value: any }[] }[];
    };
    const fields = emr.sections.flatMap((s) => s.fields);
    const bmi = fields.find((f) => f.id === "bmi_kg_m2");
    expect(bmi?.value?.value ?? bmi?.value).toBeTruthy();

    // Surveys persisted with the export.
    const exported = (await api.exportVisit(final.visit_id)) as {
      surveys: { kind: string }[];
    };
    const kinds = exported.surveys.map((s) => s.kind).sort();
    expect(kinds).toEqual(["emr_review", "red_flag_review"]);
  }, 60_000);
});
