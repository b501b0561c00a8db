/** Screen view-models derived solely from service snapshots.
 *
 * No clinical values are computed here: red/yellow highlighting comes from
 * the server's `severity_display`, the save gate from the server's flag
 * categories and acknowledgement list, and the single enabled clarification
 * input from the server's cursor. */

import { SECTIONS } from "./types.js";
import type { RedFlagPayload, Section, VisitSnapshot } from "./types.js";

export interface SectionRow {
  section: Section;
  status: string;
  locked: boolean;
  recordingEnabled: boolean;
}

export interface ClarificationInput {
  section: Section;
  questionId: number;
  questionText: string;
  enabled: boolean;
}

export interface FlagRow {
  ruleId: string;
  title: string;
  detail: string;
  highlight: "red" | "yellow";
  acknowledged: boolean;
  acknowledgementRequired: boolean;
}

export interface SaveGate {
  enabled: boolean;
  blockingFlagIds: string[];
}

export interface ScreenModel {
  screen: VisitSnapshot["state"];
  version: number;
  sections: SectionRow[];
  clarificationInputs: ClarificationInput[];
  flags: FlagRow[];
  saveGate: SaveGate;
  warnings: string[];
}

function flagRows(snapshot: VisitSnapshot): FlagRow[] {
  const acked = new Set(snapshot.acknowledgements);
  const flags = snapshot.report?.flags ?? [];
  return flags.map((flag: RedFlagPayload) => ({
    ruleId: flag.rule_id,
    title: flag.title,
    detail: flag.detail,
    highlight: flag.severity_display,
    acknowledged: acked.has(flag.rule_id),
    acknowledgementRequired: flag.category === "critical",
  }));
}

export function deriveScreenModel(snapshot: VisitSnapshot): ScreenModel {
  const locked = new Set(snapshot.locked_sections);
  const sections: SectionRow[] = SECTIONS.map((section) => ({
    section,
    status: snapshot.section_status[section],
    locked: locked.has(section),
    recordingEnabled:
      snapshot.state === "recording" && !locked.has(section),
  }));

  const cursor = snapshot.clarification_cursor;
  const clarificationInputs: ClarificationInput[] = [];
  for (const section of SECTIONS) {
    for (const question of snapshot.clarifications[section] ?? []) {
      clarificationInputs.push({
        section,
        questionId: question.id,
        questionText: question.question_text,
        enabled:
          snapshot.state === "clarifying" &&
          cursor !== null &&
          cursor[0] === section &&
          cursor[1] === question.id,
      });
    }
  }

  const flags = flagRows(snapshot);
  const blocking = flags
    .filter((f) => f.acknowledgementRequired && !f.acknowledged)
    .map((f) => f.ruleId);
  const saveGate: SaveGate = {
    enabled: snapshot.state === "red_flag_review" && blocking.length === 0,
    blockingFlagIds: blocking,
  };

  return {
    screen: snapshot.state,
    version: snapshot.version,
    sections,
    clarificationInputs,
    flags,
    saveGate,
    warnings: [...snapshot.warnings],
  };
}

/** The inputs a clinician can actually type into right now. While
 * clarifying this is exactly one input (the cursor question). */
export function enabledClarificationInputs(
  model: ScreenModel,
): ClarificationInput[] {
  return model.clarificationInputs.filter((input) => input.enabled);
}
