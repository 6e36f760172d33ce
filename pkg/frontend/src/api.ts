import type { Decision, LexiconPayload, RecordPayload, StatsPayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let code = "http_error";
  let message = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep defaults
  }
  throw new ApiError(resp.status, code, message);
}

/** Thin typed client over the review endpoints; the server is the source of truth. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async nextRecord(reviewer: string): Promise<RecordPayload | null> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/annotations/next?reviewer=${encodeURIComponent(reviewer)}`,
    );
    if (resp.status === 204) return null;
    await raiseForStatus(resp);
    return (await resp.json()) as RecordPayload;
  }

  async submitDecision(
    recordId: string,
    reviewer: string,
    decision: Decision,
    label?: string,
  ): Promise<RecordPayload> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/annotations/${encodeURIComponent(recordId)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ reviewer, decision, label: label ?? null }),
      },
    );
    await raiseForStatus(resp);
    return (await resp.json()) as RecordPayload;
  }

  async stats(): Promise<StatsPayload> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/annotations/stats`);
    await raiseForStatus(resp);
    return (await resp.json()) as StatsPayload;
  }

  async lexicon(): Promise<LexiconPayload> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/lexicon`);
    await raiseForStatus(resp);
    return (await resp.json()) as LexiconPayload;
  }
}
