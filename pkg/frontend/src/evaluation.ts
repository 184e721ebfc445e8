/** Evaluation card view model.
 *
 * The console performs no metric math: every number below is copied verbatim
 * from the service response so UI and reports can never disagree.
 */

import type { EvaluationResponse, MetricRow } from "./types.js";

export const METRIC_FIELDS = ["mse", "rmse", "rl2n", "rl2n_b", "pib"] as const;
export type MetricField = (typeof METRIC_FIELDS)[number];

export const METRIC_LABELS: Record<MetricField, string> = {
  mse: "MSE",
  rmse: "RMSE",
  rl2n: "RL2N [%]",
  rl2n_b: "RL2N-B [%]",
  pib: "PIB [%]",
};

export interface EvaluationCard {
  experimentId: string;
  window: number;
  modelVersion: number;
  rows: { target: "pressure" | "flow"; metrics: MetricRow }[];
}

export function evaluationCard(response: EvaluationResponse): EvaluationCard {
  return {
    experimentId: response.experiment_id,
    window: response.window,
    modelVersion: response.prediction.model_version,
    rows: [
      { target: "pressure", metrics: { ...response.pressure } },
      { target: "flow", metrics: { ...response.flow } },
    ],
  };
}

/** Row cells in table order; values untouched, formatting is the DOM's job. */
export function cardCells(card: EvaluationCard): { target: string; cells: number[] }[] {
  return card.rows.map((row) => ({
    target: row.target,
    cells: METRIC_FIELDS.map((field) => row.metrics[field]),
  }));
}
