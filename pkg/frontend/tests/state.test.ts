import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiClient, ApiError } from "../src/api.js";
import { ReviewController } from "../src/reviewState.js";
import type { RecordPayload, StatsPayload } from "../src/types.js";

function record(id: string, proposed: string | null = "Unspecified"): RecordPayload {
  return {
    record_id: id,
    note: { id, age_years: 0, age_months: 4, text: `post imms, ${id}`, gold: null },
    proposed,
    engine: "rules",
    proposed_span: [5, 9],
    status: "pending",
    final: null,
    reviewer: null,
    decided_at: null,
    skip_count: 0,
  };
}

const emptyStats: StatsPayload = {
  total: 0, pending: 0, accepted: 0, corrected: 0, leased: 0,
  dual_reviewed: 0, skips: 0, agreement: null,
};

interface FakeOptions {
  queue?: RecordPayload[];
  failSubmissions?: number;
  alreadyDecidedAfterFailure?: boolean;
}

/** In-memory stand-in for the service, implementing the ApiClient surface. */
function fakeApi(options: FakeOptions = {}) {
  const queue = [...(options.queue ?? [])];
  let failures = options.failSubmissions ?? 0;
  const submissions: { id: string; decision: string; label?: string }[] = [];
  const decided = new Set<string>();
  return {
    submissions,
    async nextRecord() {
      return queue.length ? queue[0]! : null;
    },
    async submitDecision(recordId: string, _reviewer: string, decision: string, label?: string) {
      if (failures > 0) {
        failures -= 1;
        if (options.alreadyDecidedAfterFailure) {
          // the attempt actually landed server-side before the response was lost
          decided.add(recordId);
          submissions.push({ id: recordId, decision, label });
          queue.shift();
        }
        throw new Error("network down");
      }
      if (decided.has(recordId)) {
        throw new ApiError(409, "conflict", `record '${recordId}' is already decided`);
      }
      submissions.push({ id: recordId, decision, label });
      if (decision !== "skip") decided.add(recordId);
      queue.shift();
      return record(recordId);
    },
    async stats() {
      return { ...emptyStats, total: submissions.length };
    },
    async lexicon() {
      return {
        version: "t",
        canonical_ids: ["Influenza", "Rotavirus"],
        entries: [
          { canonical_id: "Influenza", kind: "disease-named" },
          { canonical_id: "Rotavirus", kind: "disease-named" },
        ],
      };
    },
  };
}

function controllerWith(
  api: ReturnType<typeof fakeApi>,
  onChange: (c: ReviewController) => void = () => {},
) {
  return new ReviewController(api as unknown as ApiClient, "alice", onChange);
}

test("start loads picker options, stats and the first card", async () => {
  const api = fakeApi({ queue: [record("r1")] });
  const controller = controllerWith(api);
  await controller.start();
  assert.equal(controller.phase, "reviewing");
  assert.equal(controller.card?.recordId, "r1");
  assert.deepEqual(controller.pickerOptions, ["No", "Unspecified", "Influenza", "Rotavirus"]);
});

test("accept submits once and advances to the next card", async () => {
  const api = fakeApi({ queue: [record("r1"), record("r2")] });
  const controller = controllerWith(api);
  await controller.start();
  await controller.accept();
  assert.deepEqual(api.submissions, [{ id: "r1", decision: "accept", label: undefined }]);
  assert.equal(controller.card?.recordId, "r2");
});

test("a submitting phase is entered and decisions are gated on reviewing", async () => {
  const api = fakeApi({ queue: [record("r1")] });
  const phases: string[] = [];
  const controller = controllerWith(api, (c) => phases.push(c.phase));
  await controller.start();
  assert.equal(controller.decisionsEnabled, true);
  await controller.accept();
  assert.ok(phases.includes("submitting"));
  // queue empty now: another accept is a no-op
  await controller.accept();
  assert.equal(api.submissions.length, 1);
});

test("correct requires the picker to be open and a known option", async () => {
  const api = fakeApi({ queue: [record("r1")] });
  const controller = controllerWith(api);
  await controller.start();
  await controller.correct("Influenza"); // picker closed: ignored
  assert.equal(api.submissions.length, 0);
  controller.openPicker();
  assert.equal(controller.phase, "correcting");
  await assert.rejects(() => controller.correct("Made Up Vaccine"), /not a picker option/);
  await controller.correct("Influenza");
  assert.deepEqual(api.submissions, [{ id: "r1", decision: "correct", label: "Influenza" }]);
});

test("skip submits and advances without marking the record decided", async () => {
  const api = fakeApi({ queue: [record("r1"), record("r2")] });
  const controller = controllerWith(api);
  await controller.start();
  await controller.skip();
  assert.deepEqual(api.submissions[0], { id: "r1", decision: "skip", label: undefined });
  assert.equal(controller.card?.recordId, "r2");
});

test("empty queue shows the all-reviewed state", async () => {
  const api = fakeApi({ queue: [] });
  const controller = controllerWith(api);
  await controller.start();
  assert.equal(controller.phase, "empty");
  assert.equal(controller.card, null);
});

test("lost response cannot double-submit: retry accepts the server's 409", async () => {
  const api = fakeApi({
    queue: [record("r1")],
    failSubmissions: 1,
    alreadyDecidedAfterFailure: true,
  });
  const controller = controllerWith(api);
  await controller.start();
  await controller.accept();
  assert.equal(controller.phase, "error");
  await controller.retry();
  // the first attempt landed server-side; retry saw already-decided and moved on
  assert.equal(api.submissions.length, 1);
  assert.equal(controller.phase, "empty");
});

test("stats fetch failure marks the panel stale instead of breaking the loop", async () => {
  const api = fakeApi({ queue: [record("r1")] });
  const failingStats = {
    ...api,
    async stats(): Promise<StatsPayload> {
      throw new Error("stats endpoint down");
    },
  };
  const controller = controllerWith(failingStats as ReturnType<typeof fakeApi>);
  await controller.start();
  assert.equal(controller.statsStale, true);
  assert.equal(controller.phase, "reviewing");
  await controller.accept();
  assert.equal(api.submissions.length, 1);
});

test("network failure with no server-side effect retries cleanly", async () => {
  const api = fakeApi({ queue: [record("r1")], failSubmissions: 1 });
  const controller = controllerWith(api);
  await controller.start();
  await controller.accept();
  assert.equal(controller.phase, "error");
  await controller.retry();
  assert.deepEqual(api.submissions, [{ id: "r1", decision: "accept", label: undefined }]);
  assert.equal(controller.phase, "empty");
});
