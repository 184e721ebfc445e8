/** Experiment form state: submit stays disabled while any invariant is violated;
 * a successful submit immediately fetches the forecast for the new experiment. */

import { ApiError, TwinApi } from "./api.js";
import type { Prediction } from "./types.js";
import { FormValues, Violation, validateForm } from "./validation.js";

export interface ForecastView {
  experimentId: string;
  prediction: Prediction;
  estimatedDuration: number | null; // null: predicted pressure never reaches end pressure
  modelVersion: number;
}

export interface SubmitOutcome {
  ok: boolean;
  forecast?: ForecastView;
  serverErrors?: Violation[];
}

export class ExperimentForm {
  values: FormValues = {
    experiment_id: "",
    concentration: 12.5,
    plate_count: 2,
    end_pressure: 10,
    cloth_cycles: 1,
  };
  serverErrors: Violation[] = [];

  constructor(
    private readonly api: TwinApi,
    private readonly predictDt = 0.5,
    private readonly predictHorizon = 3600,
  ) {}

  set<K extends keyof FormValues>(field: K, value: FormValues[K]): void {
    this.values[field] = value;
    this.serverErrors = [];
  }

  violations(): Violation[] {
    return [...validateForm(this.values), ...this.serverErrors];
  }

  canSubmit(): boolean {
    return validateForm(this.values).length === 0;
  }

  /** POST /experiments then POST /predict; server errors land on fields. */
  async submit(): Promise<SubmitOutcome> {
    if (!this.canSubmit()) {
      return { ok: false, serverErrors: this.violations() };
    }
    try {
      const record = await this.api.createExperiment({ ...this.values });
      const prediction = await this.api.predict(
        { ...this.values },
        this.predictDt,
        this.predictHorizon,
      );
      return {
        ok: true,
        forecast: {
          experimentId: record.experiment_id,
          prediction,
          estimatedDuration: prediction.duration,
          modelVersion: prediction.model_version,
        },
      };
    } catch (error) {
      if (error instanceof ApiError) {
        this.serverErrors = mapServerError(error);
        return { ok: false, serverErrors: this.serverErrors };
      }
      throw error;
    }
  }
}

function mapServerError(error: ApiError): Violation[] {
  if (error.status === 409) {
    return [{ field: "experiment_id", rule: "experiment id already exists" }];
  }
  const violations = error.body.details?.violations;
  if (Array.isArray(violations)) {
    return violations.map((rule) => ({ field: fieldOf(String(rule)), rule: String(rule) }));
  }
  return [{ field: "experiment_id", rule: error.body.message }];
}

function fieldOf(rule: string): Violation["field"] {
  for (const field of [
    "concentration",
    "plate_count",
    "end_pressure",
    "cloth_cycles",
  ] as const) {
    if (rule.startsWith(field)) return field;
  }
  return "experiment_id";
}
