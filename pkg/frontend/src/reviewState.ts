/** Review-loop state machine, DOM-free so it is testable and scriptable.
 *
 * One card at a time: fetch next pending record, decide, auto-advance.
 * Decisions are disabled while a submission is in flight, and a record id is
 * never submitted twice from this client; a 409 on retry (the server already
 * holds our decision) is treated as success, so a dropped response cannot
 * lose or duplicate a decision.
 */

import { ApiError, type ApiClient } from "./api.js";
import { buildPickerOptions } from "./picker.js";
import type { RecordPayload, StatsPayload } from "./types.js";

export type Phase =
  | "idle"
  | "loading"
  | "reviewing"
  | "correcting"
  | "submitting"
  | "empty"
  | "error";

export interface ReviewCard {
  recordId: string;
  ageDisplay: string;
  text: string;
  span: [number, number] | null;
  proposed: string | null;
  engine: string | null;
}

function toCard(record: RecordPayload): ReviewCard {
  return {
    recordId: record.record_id,
    ageDisplay: `${record.note.age_years}y ${record.note.age_months}m`,
    text: record.note.text,
    span: record.proposed_span,
    proposed: record.proposed,
    engine: record.engine,
  };
}

export class ReviewController {
  phase: Phase = "idle";
  card: ReviewCard | null = null;
  stats: StatsPayload | null = null;
  statsStale = false;
  pickerOptions: string[] = [];
  errorMessage: string | null = null;

  private readonly submitted = new Set<string>();
  private pendingDecision: { decision: "accept" | "correct" | "skip"; label?: string } | null =
    null;

  constructor(
    private readonly api: ApiClient,
    readonly reviewer: string,
    private readonly onChange: (controller: ReviewController) => void = () => {},
  ) {}

  get decisionsEnabled(): boolean {
    return this.phase === "reviewing";
  }

  private emit(): void {
    this.onChange(this);
  }

  async start(): Promise<void> {
    const lexicon = await this.api.lexicon();
    this.pickerOptions = buildPickerOptions(lexicon.canonical_ids);
    await this.refreshStats();
    await this.loadNext();
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.api.stats();
      this.statsStale = false;
    } catch {
      this.statsStale = true;
    }
    this.emit();
  }

  async loadNext(): Promise<void> {
    this.phase = "loading";
    this.emit();
    try {
      const record = await this.api.nextRecord(this.reviewer);
      if (record === null) {
        this.card = null;
        this.phase = "empty";
      } else {
        this.card = toCard(record);
        this.phase = "reviewing";
      }
    } catch (err) {
      this.phase = "error";
      this.errorMessage = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  openPicker(): void {
    if (this.phase !== "reviewing") return;
    this.phase = "correcting";
    this.emit();
  }

  closePicker(): void {
    if (this.phase !== "correcting") return;
    this.phase = "reviewing";
    this.emit();
  }

  async accept(): Promise<void> {
    if (this.phase !== "reviewing") return;
    await this.submit({ decision: "accept" });
  }

  async skip(): Promise<void> {
    if (this.phase !== "reviewing") return;
    await this.submit({ decision: "skip" });
  }

  async correct(label: string): Promise<void> {
    if (this.phase !== "correcting") return;
    if (!this.pickerOptions.includes(label)) {
      throw new Error(`label ${label} is not a picker option`);
    }
    await this.submit({ decision: "correct", label });
  }

  /** Retry after a network failure; the pending decision is not lost. */
  async retry(): Promise<void> {
    if (this.phase !== "error") return;
    if (this.pendingDecision !== null && this.card !== null) {
      const pending = this.pendingDecision;
      this.phase = pending.decision === "correct" ? "correcting" : "reviewing";
      if (pending.decision === "correct") {
        await this.submit(pending);
      } else {
        this.phase = "reviewing";
        await this.submit(pending);
      }
      return;
    }
    await this.loadNext();
  }

  private async submit(request: {
    decision: "accept" | "correct" | "skip";
    label?: string;
  }): Promise<void> {
    const card = this.card;
    if (card === null) return;
    if (request.decision !== "skip" && this.submitted.has(card.recordId)) {
      // idempotency: this client never records two decisions for one card
      await this.loadNext();
      return;
    }
    this.phase = "submitting";
    this.pendingDecision = request;
    this.emit();
    try {
      await this.api.submitDecision(card.recordId, this.reviewer, request.decision, request.label);
      if (request.decision !== "skip") {
        this.submitted.add(card.recordId);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && this.submittedServerSide(err)) {
        // our earlier attempt landed; treat as success
        this.submitted.add(card.recordId);
      } else {
        this.phase = "error";
        this.errorMessage = err instanceof Error ? err.message : String(err);
        this.emit();
        return;
      }
    }
    this.pendingDecision = null;
    await this.refreshStats();
    await this.loadNext();
  }

  private submittedServerSide(err: ApiError): boolean {
    return err.message.includes("already decided");
  }
}
