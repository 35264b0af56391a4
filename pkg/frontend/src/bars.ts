import { ColumnState, Prediction } from "./types.js";

export interface BarRow {
  token: string;
  probLabel: string;
  widthPct: number;
}

export function formatProb(prob: number): string {
  return prob.toFixed(4);
}

/** Bar geometry: width is directly proportional to the probability. */
export function barModel(predictions: Prediction[]): BarRow[] {
  return predictions.map((p) => ({
    token: p.token,
    probLabel: formatProb(p.prob),
    widthPct: p.prob * 100,
  }));
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function columnHtml(backend: string, state: ColumnState): string {
  if (state.kind === "pending") {
    return `<h3>${escapeHtml(backend)}</h3><p class="pending">querying…</p>`;
  }
  if (state.kind === "error") {
    return `<h3>${escapeHtml(backend)}</h3>` +
      `<span class="error-chip" title="${escapeHtml(state.message)}">` +
      `failed: ${escapeHtml(state.message)}</span>`;
  }
  const rows = barModel(state.result.predictions).map((row) => `
    <div class="bar-row">
      <span class="bar-token">${escapeHtml(row.token)}</span>
      <span class="bar-track"><span class="bar-fill" style="width:${row.widthPct}%"></span></span>
      <span class="bar-prob">${row.probLabel}</span>
    </div>`).join("");
  return `<h3>${escapeHtml(backend)}</h3>${rows || "<p>no predictions</p>"}`;
}
