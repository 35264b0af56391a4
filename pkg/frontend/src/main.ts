import { getBackends, getExamples, predict } from "./api.js";
import { columnHtml } from "./bars.js";
import { downloadJson, exportJson, parseExpectations } from "./exporter.js";
import {
  applyFailure,
  applyResult,
  beginSubmit,
  createState,
  curateDraft,
  setDraft,
  toggleBackend,
} from "./state.js";
import { canSubmit, draftHint } from "./validate.js";

const API_BASE = (window as { SEBENCH_API?: string }).SEBENCH_API ?? "";
const TOP_K = 5;

const state = createState();

const el = {
  sentence: document.getElementById("sentence") as HTMLTextAreaElement,
  hint: document.getElementById("hint") as HTMLElement,
  submit: document.getElementById("submit") as HTMLButtonElement,
  backends: document.getElementById("backends") as HTMLElement,
  columns: document.getElementById("columns") as HTMLElement,
  category: document.getElementById("category") as HTMLSelectElement,
  expectation: document.getElementById("expectation") as HTMLInputElement,
  note: document.getElementById("note") as HTMLInputElement,
  curate: document.getElementById("curate") as HTMLButtonElement,
  curateError: document.getElementById("curate-error") as HTMLElement,
  curatedList: document.getElementById("curated-list") as HTMLElement,
  exportBtn: document.getElementById("export") as HTMLButtonElement,
  loadExample: document.getElementById("load-example") as HTMLButtonElement,
};

function refreshControls(): void {
  const hint = draftHint(state.draft, state.selectedBackends);
  el.hint.textContent = hint ?? "";
  el.submit.disabled = !canSubmit(state.draft, state.selectedBackends);
}

function renderColumns(): void {
  el.columns.innerHTML = "";
  for (const backend of state.selectedBackends) {
    const column = state.columns.get(backend);
    if (!column) continue;
    const div = document.createElement("div");
    div.className = "column";
    div.innerHTML = columnHtml(backend, column);
    el.columns.appendChild(div);
  }
}

function renderCurated(): void {
  el.curatedList.innerHTML = state.curated
    .map((ex) => `<li><code>${ex.category}</code> ${ex.sentence}</li>`)
    .join("");
  el.exportBtn.disabled = state.curated.length === 0;
}

async function submit(): Promise<void> {
  beginSubmit(state);
  renderColumns();
  await Promise.all(state.selectedBackends.map(async (backend) => {
    try {
      const result = await predict(API_BASE, backend, state.draft, TOP_K);
      applyResult(state, backend, result);
    } catch (err) {
      applyFailure(state, backend, err instanceof Error ? err.message : String(err));
    }
    renderColumns();
  }));
}

async function init(): Promise<void> {
  try {
    state.availableBackends = await getBackends(API_BASE);
  } catch (err) {
    el.backends.textContent =
      `cannot reach the prediction service: ${err instanceof Error ? err.message : err}`;
    return;
  }
  el.backends.innerHTML = "";
  for (const name of state.availableBackends) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () => {
      toggleBackend(state, name);
      refreshControls();
    });
    label.appendChild(box);
    label.append(` ${name}`);
    el.backends.appendChild(label);
  }
  refreshControls();
}

el.sentence.addEventListener("input", () => {
  setDraft(state, el.sentence.value);
  refreshControls();
});

el.submit.addEventListener("click", () => void submit());

el.curate.addEventListener("click", () => {
  const outcome = curateDraft(
    state, el.category.value, parseExpectations(el.expectation.value),
    el.note.value);
  el.curateError.textContent = outcome.error ?? "";
  if (outcome.example) {
    el.expectation.value = "";
    el.note.value = "";
    renderCurated();
  }
});

el.exportBtn.addEventListener("click", () => {
  downloadJson("curated_examples.json", exportJson(state.curated));
});

el.loadExample.addEventListener("click", () => {
  void getExamples(API_BASE).then((examples) => {
    const pick = examples[Math.floor(Math.random() * examples.length)];
    el.sentence.value = pick.sentence;
    setDraft(state, pick.sentence);
    refreshControls();
  });
});

void init();
