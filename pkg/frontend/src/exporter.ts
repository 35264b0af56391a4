import { MaskedExample } from "./types.js";

/** Serialize curated examples in the benchmark fixture format. */
export function exportJson(examples: MaskedExample[]): string {
  return JSON.stringify(examples, null, 2) + "\n";
}

/** "NullPointerException, NPE" -> ["nullpointerexception", "npe"] */
export function parseExpectations(raw: string): string[] {
  return raw
    .split(",")
    .map((t) => t.trim().toLowerCase())
    .filter((t) => t.length > 0);
}

export function downloadJson(filename: string, text: string): void {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}
