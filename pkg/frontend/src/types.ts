/** Wire shapes served by the annotation API. */

export interface NotePayload {
  id: string;
  age_years: number;
  age_months: number;
  text: string;
  gold: string | null;
}

export interface RecordPayload {
  record_id: string;
  note: NotePayload;
  proposed: string | null;
  engine: string | null;
  proposed_span: [number, number] | null;
  status: string;
  final: string | null;
  reviewer: string | null;
  decided_at: number | null;
  skip_count: number;
}

export interface AgreementPayload {
  dual_reviewed: number;
  ratio: number;
}

export interface StatsPayload {
  total: number;
  pending: number;
  accepted: number;
  corrected: number;
  leased: number;
  dual_reviewed: number;
  skips: number;
  agreement: AgreementPayload | null;
}

export interface LexiconPayload {
  version: string;
  canonical_ids: string[];
  entries: { canonical_id: string; kind: string }[];
}

export type Decision = "accept" | "correct" | "skip";
