import { CATEGORIES, MaskedExample } from "./types.js";

export const MASK = "[MASK]";

export function maskCount(sentence: string): number {
  let count = 0;
  let at = sentence.indexOf(MASK);
  while (at !== -1) {
    count += 1;
    at = sentence.indexOf(MASK, at + MASK.length);
  }
  return count;
}

export function draftHint(draft: string, selectedBackends: string[]): string | null {
  const masks = maskCount(draft);
  if (masks === 0) return `Add exactly one ${MASK} to the sentence.`;
  if (masks > 1) return `Only one ${MASK} is allowed (found ${masks}).`;
  if (selectedBackends.length === 0) return "Select at least one backend.";
  return null;
}

export function canSubmit(draft: string, selectedBackends: string[]): boolean {
  return draftHint(draft, selectedBackends) === null;
}

/** Schema errors for a curated example; an empty list means it is valid. */
export function exampleErrors(candidate: unknown): string[] {
  const errors: string[] = [];
  if (typeof candidate !== "object" || candidate === null) {
    return ["example must be an object"];
  }
  const ex = candidate as Partial<MaskedExample>;
  if (!Number.isInteger(ex.id)) errors.push("id must be an integer");
  if (typeof ex.sentence !== "string" || maskCount(ex.sentence) !== 1) {
    errors.push(`sentence must contain exactly one ${MASK}`);
  }
  if (!CATEGORIES.includes(ex.category as never)) {
    errors.push("category must be positive, negative or neutral");
  }
  if (!Array.isArray(ex.expectation)
      || ex.expectation.some((t) => typeof t !== "string" || t.length === 0)) {
    errors.push("expectation must be a list of tokens");
  }
  if (typeof ex.expectation_note !== "string") {
    errors.push("expectation_note must be a string");
  }
  return errors;
}
