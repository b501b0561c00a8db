/** Wire types mirroring the record-service API payloads. */

export const SECTIONS = [
  "personal_medical_history",
  "family_history",
  "socio_economic_history",
  "past_pregnancy",
  "present_pregnancy",
  "proposed_plan",
] as const;

export type Section = (typeof SECTIONS)[number];

export type VisitStateName =
  | "registered"
  | "recording"
  | "clarifying"
  | "emr_review"
  | "medical_questions"
  | "red_flag_review"
  | "ultrasound_attach"
  | "finalized";

export interface ClarificationQuestion {
  id: number;
  question_text: string;
  target_field_ids: string[];
  kind: string;
}

export interface MedicalQuestion {
  id: number;
  question_text: string;
  rationale_field_ids: string[];
  section: Section;
}

export interface RedFlagPayload {
  category: "critical" | "missing";
  rule_id: string;
  title: string;
  detail: string;
  source: string;
  severity_display: "red" | "yellow";
  snippet_ids: string[];
}

export interface ReportPayload {
  doc_ref: string;
  rules_version: string;
  flags: RedFlagPayload[];
}

export interface VisitSnapshot {
  mr_number: string;
  visit_id: string;
  kind: "new" | "returning";
  visit_date: string;
  state: VisitStateName;
  version: number;
  section_status: Record<Section, string>;
  locked_sections: Section[];
  vitals: Record<string, number> | null;
  clarification_cursor: [Section, number] | null;
  clarifications: Record<string, ClarificationQuestion[]>;
  medical_questions: MedicalQuestion[];
  emr: unknown | null;
  report: ReportPayload | null;
  acknowledgements: string[];
  ultrasound_digest: string | null;
  staged_ultrasound: Record<string, string>;
  warnings: string[];
  event_log: unknown[];
}

export interface PatientRecord {
  mr_number: string;
  name: string;
  age: number | null;
  care_type: string;
  visit_ids: string[];
}

export interface Vitals {
  height_cm: number;
  weight_kg: number;
  systolic_mmHg: number;
  diastolic_mmHg: number;
  temperature_C: number;
  pulse_bpm: number;
}

export type SurveyKind = "emr_review" | "red_flag_review";
