/** Payload shapes of the twin service API (snake_case JSON, verbatim). */

export interface ExperimentConfig {
  experiment_id: string;
  concentration: number;
  plate_count: number;
  end_pressure: number;
  cloth_cycles: number;
  created_at?: string | null;
}

export interface ExperimentRecord {
  experiment_id: string;
  config: ExperimentConfig;
  status: "open" | "complete";
  sample_count: number;
  timed_out: boolean;
}

export interface SamplePoint {
  t: number;
  pressure: number;
  flow: number;
}

export interface Prediction {
  t: number[];
  pressure: number[];
  flow: number[];
  duration: number | null;
  exceeds_horizon: boolean;
  model_version: number;
}

export interface LiveResponse {
  experiment_id: string;
  status: "open" | "complete";
  timed_out: boolean;
  samples: SamplePoint[];
  cursor: number;
  prediction: Prediction | null;
}

export interface MetricRow {
  mse: number;
  rmse: number;
  rl2n: number;
  rl2n_b: number;
  pib: number;
}

export interface BandArrays {
  t: number[];
  ma: number[];
  lower: number[];
  upper: number[];
  window: number;
  z: number;
}

export interface EvaluationResponse {
  experiment_id: string;
  window: number;
  pressure: MetricRow;
  flow: MetricRow;
  band: { pressure: BandArrays; flow: BandArrays };
  prediction: Prediction;
}

export interface LifespanPoint {
  cycles: number;
  duration: number | null;
  max_flow: number;
  violates: boolean;
}

export interface LifespanResponse {
  basis: ExperimentConfig;
  points: LifespanPoint[];
  recommended_cycle: number | null;
  flow_floor: number;
  duration_cap: number | null;
  model_version: number;
}

export interface RegistryTarget {
  version: number;
  kind: string;
  seed: number;
  model_id: string | null;
  final_val_mse: number | null;
  final_val_r2: number | null;
  epochs: number | null;
}

export interface ModelsCurrentResponse {
  version: number | null;
  targets: Record<string, RegistryTarget>;
  retrain: { state: "idle" | "running"; started_at: string | null; last_error: string | null };
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
