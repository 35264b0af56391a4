export interface Prediction {
  token: string;
  prob: number;
}

export interface PredictionSet {
  model_name: string;
  example_id: number;
  predictions: Prediction[];
}

export type Category = "positive" | "negative" | "neutral";

export const CATEGORIES: Category[] = ["positive", "negative", "neutral"];

export interface MaskedExample {
  id: number;
  sentence: string;
  category: Category;
  expectation: string[];
  expectation_note: string;
}

export type ColumnState =
  | { kind: "pending" }
  | { kind: "ok"; result: PredictionSet }
  | { kind: "error"; message: string };
