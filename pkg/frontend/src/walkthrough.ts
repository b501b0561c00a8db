/** Scripted seven-step visit: vitals, per-section recording, linear
 * clarifications, EMR review (with survey), medical questions, red-flag
 * acknowledgement (with survey), save. Records the screen model after
 * every action so tests can verify UI gating at each step. */

import { ApiClient } from "./api.js";
import { VisitController } from "./controller.js";
import { enabledClarificationInputs } from "./screen.js";
import type { ScreenModel } from "./screen.js";
import { SECTIONS } from "./types.js";
import type { Section, VisitSnapshot, Vitals } from "./types.js";

export interface WalkthroughScript {
  mrNumber: string;
  patientName: string;
  visitDate: string;
  vitals: Vitals;
  /** Base64 WAV per section, uploaded in script order. */
  sectionAudio: Record<Section, string>;
  clarificationAnswer: string;
  questionAnswer: string;
  emrSurvey: Record<string, unknown>;
  flagSurvey: Record<string, unknown>;
}

export interface WalkthroughResult {
  steps: ScreenModel[];
  final: VisitSnapshot;
}

export async function runScriptedWalkthrough(
  api: ApiClient,
  script: WalkthroughScript,
): Promise<WalkthroughResult> {
  const steps: ScreenModel[] = [];
  const track = (model: ScreenModel): ScreenModel => {
    steps.push(model);
    return model;
  };

  await api.createPatient(script.mrNumber, script.patientName);
  const console = new VisitController(api);
  track(await console.startVisit(script.mrNumber, "new", script.visitDate));
  track(await console.enterVitals(script.vitals));

  for (const section of SECTIONS) {
    track(await console.uploadRecording(section, script.sectionAudio[section]));
  }

  let model = console.screen;
  while (model.screen === "clarifying") {
    const enabled = enabledClarificationInputs(model);
    if (enabled.length !== 1) {
      throw new Error(
        `expected exactly one enabled clarification input, got ${enabled.length}`,
      );
    }
    model = track(
      await console.answerCurrentClarification(script.clarificationAnswer),
    );
  }

  await console.submitSurvey("emr_review", script.emrSurvey);
  model = track(await console.finalizeEmr([]));

  const answers: Record<number, string> = {};
  for (const question of console.snapshot.medical_questions) {
    answers[question.id] = script.questionAnswer;
  }
  model = track(await console.completeQuestions(answers));

  if (model.saveGate.blockingFlagIds.length > 0) {
    await console.submitSurvey("red_flag_review", script.flagSurvey);
    model = track(
      await console.acknowledgeFlags(model.saveGate.blockingFlagIds),
    );
  }
  if (!model.saveGate.enabled) {
    throw new Error("save gate still disabled after acknowledgements");
  }
  model = track(await console.saveVisit(false));
  if (model.screen !== "finalized") {
    throw new Error(`expected finalized visit, got ${model.screen}`);
  }
  return { steps, final: console.snapshot };
}
