/** One active visit per console instance. Every mutation round-trips
 * through the API with the server's version token; the screen model is
 * re-derived from each response. */

import { ApiClient } from "./api.js";
import { deriveScreenModel } from "./screen.js";
import type { ScreenModel } from "./screen.js";
import type {
  Section,
  SurveyKind,
  VisitSnapshot,
  Vitals,
} from "./types.js";

export class VisitController {
  private latest: VisitSnapshot | null = null;

  constructor(private readonly api: ApiClient) {}

  get snapshot(): VisitSnapshot {
    if (this.latest === null) {
      throw new Error("no active visit");
    }
    return this.latest;
  }

  get screen(): ScreenModel {
    return deriveScreenModel(this.snapshot);
  }

  private adopt(snapshot: VisitSnapshot): ScreenModel {
    this.latest = snapshot;
    return deriveScreenModel(snapshot);
  }

  async startVisit(
    mrNumber: string,
    kind: "new" | "returning",
    visitDate: string,
  ): Promise<ScreenModel> {
    return this.adopt(await this.api.openVisit(mrNumber, kind, visitDate));
  }

  async resumeVisit(visitId: string): Promise<ScreenModel> {
    return this.adopt(await this.api.getVisit(visitId));
  }

  async enterVitals(vitals: Vitals): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(await this.api.enterVitals(s.visit_id, s.version, vitals));
  }

  async uploadRecording(
    section: Section,
    audioB64: string,
  ): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.uploadSectionAudio(s.visit_id, s.version, section, audioB64),
    );
  }

  /** Answer the single enabled clarification input (the cursor question). */
  async answerCurrentClarification(answerText: string): Promise<ScreenModel> {
    const s = this.snapshot;
    if (s.clarification_cursor === null) {
      throw new Error("no clarification pending");
    }
    const [, questionId] = s.clarification_cursor;
    return this.adopt(
      await this.api.answerClarification(
        s.visit_id,
        s.version,
        questionId,
        answerText,
      ),
    );
  }

  async finalizeEmr(edits: unknown[][] = []): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(await this.api.finalizeEmr(s.visit_id, s.version, edits));
  }

  async completeQuestions(
    answers: Record<number, string>,
  ): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.completeQuestions(s.visit_id, s.version, answers),
    );
  }

  async acknowledgeFlags(flagIds: string[]): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.acknowledgeFlags(s.visit_id, s.version, flagIds),
    );
  }

  async saveVisit(wantUltrasound = false): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.saveVisit(s.visit_id, s.version, wantUltrasound),
    );
  }

  async attachUltrasound(imageB64: string): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.attachUltrasound(s.visit_id, s.version, imageB64),
    );
  }

  async confirmUltrasound(accept: boolean): Promise<ScreenModel> {
    const s = this.snapshot;
    return this.adopt(
      await this.api.confirmUltrasound(s.visit_id, s.version, accept),
    );
  }

  async submitSurvey(
    kind: SurveyKind,
    responses: Record<string, unknown>,
  ): Promise<void> {
    await this.api.submitSurvey(this.snapshot.visit_id, kind, responses);
  }
}
