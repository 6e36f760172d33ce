import assert from "node:assert/strict";
import { test } from "node:test";

import { actionForKey } from "../src/keyboard.js";

test("review-phase bindings", () => {
  assert.equal(actionForKey("a", "reviewing"), "accept");
  assert.equal(actionForKey("A", "reviewing"), "accept");
  assert.equal(actionForKey("c", "reviewing"), "open-picker");
  assert.equal(actionForKey("s", "reviewing"), "skip");
  assert.equal(actionForKey("x", "reviewing"), null);
});

test("keys are inert while a submission is in flight", () => {
  assert.equal(actionForKey("a", "submitting"), null);
  assert.equal(actionForKey("s", "submitting"), null);
  assert.equal(actionForKey("a", "loading"), null);
  assert.equal(actionForKey("a", "empty"), null);
});

test("escape closes the picker, nothing else does", () => {
  assert.equal(actionForKey("Escape", "correcting"), "close-picker");
  assert.equal(actionForKey("a", "correcting"), null);
  assert.equal(actionForKey("Escape", "reviewing"), null);
});
