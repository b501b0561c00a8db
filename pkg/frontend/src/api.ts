/** Thin typed client over the record-service network API. Every call is a
 * plain HTTP round trip; no clinical values are computed here. */

import type {
  PatientRecord,
  Section,
  SurveyKind,
  VisitSnapshot,
  Vitals,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

export interface ApiClientOptions {
  baseUrl: string; // e.g. http://127.0.0.1:8000
  actor?: string;
  fetchImpl?: typeof fetch;
}

export class ApiClient {
  private readonly base: string;
  readonly actor: string;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ApiClientOptions) {
    this.base = options.baseUrl.replace(/\/$/, "") + "/api/v1";
    this.actor = options.actor ?? "anonymous";
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiError(response.status, payload["detail"] ?? payload);
    }
    return payload as T;
  }

  createPatient(
    mrNumber: string,
    name: string,
    age?: number,
    careType = "public",
  ): Promise<PatientRecord> {
    return this.request("POST", "/patients", {
      mr_number: mrNumber,
      name,
      age: age ?? null,
      care_type: careType,
    });
  }

  getPatient(mrNumber: string): Promise<PatientRecord> {
    return this.request("GET", `/patients/${encodeURIComponent(mrNumber)}`);
  }

  openVisit(
    mrNumber: string,
    kind: "new" | "returning",
    visitDate: string,
  ): Promise<VisitSnapshot> {
    return this.request(
      "POST",
      `/patients/${encodeURIComponent(mrNumber)}/visits`,
      { kind, visit_date: visitDate },
    );
  }

  getVisit(visitId: string): Promise<VisitSnapshot> {
    return this.request("GET", `/visits/${visitId}`);
  }

  enterVitals(
    visitId: string,
    version: number,
    vitals: Vitals,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/vitals`, {
      version,
      actor: this.actor,
      vitals,
    });
  }

  uploadSectionAudio(
    visitId: string,
    version: number,
    section: Section,
    audioB64: string,
  ): Promise<VisitSnapshot> {
    return this.request(
      "POST",
      `/visits/${visitId}/sections/${section}/transcript`,
      { version, actor: this.actor, audio_b64: audioB64 },
    );
  }

  uploadSectionText(
    visitId: string,
    version: number,
    section: Section,
    text: string,
  ): Promise<VisitSnapshot> {
    return this.request(
      "POST",
      `/visits/${visitId}/sections/${section}/transcript`,
      { version, actor: this.actor, text },
    );
  }

  answerClarification(
    visitId: string,
    version: number,
    questionId: number,
    answerText: string,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/clarifications/answer`, {
      version,
      actor: this.actor,
      question_id: questionId,
      answer_text: answerText,
    });
  }

  finalizeEmr(
    visitId: string,
    version: number,
    edits: unknown[][] = [],
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/emr/finalize`, {
      version,
      actor: this.actor,
      edits,
    });
  }

  completeQuestions(
    visitId: string,
    version: number,
    answers: Record<number, string>,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/questions/complete`, {
      version,
      actor: this.actor,
      answers,
    });
  }

  acknowledgeFlags(
    visitId: string,
    version: number,
    flagIds: string[],
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/flags/acknowledge`, {
      version,
      actor: this.actor,
      flag_ids: flagIds,
    });
  }

  saveVisit(
    visitId: string,
    version: number,
    wantUltrasound = false,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/save`, {
      version,
      actor: this.actor,
      want_ultrasound: wantUltrasound,
    });
  }

  attachUltrasound(
    visitId: string,
    version: number,
    imageB64: string,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/ultrasound`, {
      version,
      actor: this.actor,
      image_b64: imageB64,
    });
  }

  confirmUltrasound(
    visitId: string,
    version: number,
    accept: boolean,
  ): Promise<VisitSnapshot> {
    return this.request("POST", `/visits/${visitId}/ultrasound/confirm`, {
      version,
      actor: this.actor,
      accept,
    });
  }

  submitSurvey(
    visitId: string,
    kind: SurveyKind,
    responses: Record<string, unknown>,
  ): Promise<unknown> {
    return this.request("POST", `/visits/${visitId}/surveys`, {
      actor: this.actor,
      kind,
      responses,
    });
  }

  exportVisit(visitId: string, anonymize = false): Promise<unknown> {
    const query = anonymize ? "?anonymize=true" : "";
    return this.request("GET", `/visits/${visitId}/export${query}`);
  }
}
