import assert from "node:assert/strict";
import { test } from "node:test";

import { canSubmit, draftHint, exampleErrors, maskCount } from "../src/validate.js";

test("maskCount counts non-overlapping [MASK] tokens", () => {
  assert.equal(maskCount("no mask"), 0);
  assert.equal(maskCount("a [MASK] b"), 1);
  assert.equal(maskCount("[MASK] [MASK]"), 2);
  assert.equal(maskCount("[MASK][MASK][MASK]"), 3);
});

test("submit gating requires exactly one mask and a backend", () => {
  assert.equal(canSubmit("a [MASK] b", ["baseline"]), true);
  assert.equal(canSubmit("a b", ["baseline"]), false);
  assert.equal(canSubmit("[MASK] and [MASK]", ["baseline"]), false);
  assert.equal(canSubmit("a [MASK] b", []), false);
});

test("hints explain what is missing", () => {
  assert.match(draftHint("plain", ["b"]) ?? "", /exactly one/);
  assert.match(draftHint("[MASK] [MASK]", ["b"]) ?? "", /found 2/);
  assert.match(draftHint("a [MASK]", []) ?? "", /backend/);
  assert.equal(draftHint("a [MASK]", ["b"]), null);
});

test("exampleErrors accepts the fixture shape", () => {
  assert.deepEqual(exampleErrors({
    id: 1,
    sentence: "the [MASK] is here",
    category: "positive",
    expectation: ["token"],
    expectation_note: "",
  }), []);
});

test("exampleErrors rejects schema violations", () => {
  assert.ok(exampleErrors(null).length > 0);
  assert.ok(exampleErrors({
    id: 1.5, sentence: "x [MASK]", category: "positive",
    expectation: [], expectation_note: "",
  }).some((e) => e.includes("id")));
  assert.ok(exampleErrors({
    id: 1, sentence: "no mask", category: "neutral",
    expectation: [], expectation_note: "",
  }).some((e) => e.includes("[MASK]")));
  assert.ok(exampleErrors({
    id: 1, sentence: "a [MASK]", category: "weird",
    expectation: [], expectation_note: "",
  }).some((e) => e.includes("category")));
  assert.ok(exampleErrors({
    id: 1, sentence: "a [MASK]", category: "neutral",
    expectation: ["ok", ""], expectation_note: "",
  }).some((e) => e.includes("expectation")));
});
