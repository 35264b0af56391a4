import { MaskedExample, PredictionSet } from "./types.js";

async function asError(response: Response): Promise<Error> {
  try {
    const payload = await response.json();
    return new Error(payload.error ?? `HTTP ${response.status}`);
  } catch {
    return new Error(`HTTP ${response.status}`);
  }
}

export async function getBackends(base: string): Promise<string[]> {
  const response = await fetch(`${base}/backends`);
  if (!response.ok) throw await asError(response);
  const payload = await response.json();
  return payload.backends as string[];
}

export async function predict(base: string, backend: string, sentence: string,
                              topK: number): Promise<PredictionSet> {
  const response = await fetch(`${base}/predict`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ backend, sentence, top_k: topK }),
  });
  if (!response.ok) throw await asError(response);
  return (await response.json()) as PredictionSet;
}

export async function getExamples(base: string): Promise<MaskedExample[]> {
  const response = await fetch(`${base}/examples`);
  if (!response.ok) throw await asError(response);
  return (await response.json()) as MaskedExample[];
}
