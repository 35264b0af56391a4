import { Category, ColumnState, MaskedExample, PredictionSet } from "./types.js";
import { exampleErrors, maskCount } from "./validate.js";

export interface PlaygroundState {
  draft: string;
  availableBackends: string[];
  selectedBackends: string[];
  columns: Map<string, ColumnState>;
  curated: MaskedExample[];
  nextId: number;
}

export function createState(): PlaygroundState {
  return {
    draft: "",
    availableBackends: [],
    selectedBackends: [],
    columns: new Map(),
    curated: [],
    nextId: 1,
  };
}

export function setDraft(state: PlaygroundState, draft: string): void {
  state.draft = draft;
}

export function toggleBackend(state: PlaygroundState, name: string): void {
  if (state.selectedBackends.includes(name)) {
    state.selectedBackends = state.selectedBackends.filter((b) => b !== name);
  } else {
    state.selectedBackends = [...state.selectedBackends, name];
  }
}

export function beginSubmit(state: PlaygroundState): void {
  state.columns = new Map(
    state.selectedBackends.map((b) => [b, { kind: "pending" } as ColumnState]));
}

/** Last write wins per backend column; other columns are untouched. */
export function applyResult(state: PlaygroundState, backend: string,
                            result: PredictionSet): void {
  state.columns.set(backend, { kind: "ok", result });
}

export function applyFailure(state: PlaygroundState, backend: string,
                             message: string): void {
  state.columns.set(backend, { kind: "error", message });
}

export interface CurateOutcome {
  example?: MaskedExample;
  error?: string;
}

export function curateDraft(state: PlaygroundState, category: string,
                            expectation: string[],
                            note: string): CurateOutcome {
  if (!category) {
    return { error: "choose a category before adding the example" };
  }
  if (maskCount(state.draft) !== 1) {
    return { error: "the sentence must contain exactly one [MASK]" };
  }
  const example: MaskedExample = {
    id: state.nextId,
    sentence: state.draft,
    category: category as Category,
    expectation: expectation.map((t) => t.toLowerCase()),
    expectation_note: note,
  };
  const errors = exampleErrors(example);
  if (errors.length > 0) {
    return { error: errors.join("; ") };
  }
  state.curated.push(example);
  state.nextId += 1;
  return { example };
}
