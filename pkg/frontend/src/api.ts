/** Thin typed client for the twin service; all numbers pass through verbatim. */

import type {
  ApiErrorBody,
  EvaluationResponse,
  ExperimentConfig,
  ExperimentRecord,
  LifespanResponse,
  LiveResponse,
  ModelsCurrentResponse,
  Prediction,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "unknown", message: response.statusText, details: {} };
  }
  throw new ApiError(response.status, body);
}

export interface LifespanQuery {
  concentration: number;
  plate_count: number;
  end_pressure: number;
  k_max?: number;
  flow_floor?: number;
  duration_cap_factor?: number;
  dt?: number;
  horizon?: number;
}

export class TwinApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createExperiment(config: ExperimentConfig): Promise<ExperimentRecord> {
    return this.post("/experiments", config);
  }

  predict(config: ExperimentConfig, dt: number, horizon: number): Promise<Prediction> {
    return this.post("/predict", { config, dt, horizon });
  }

  live(experimentId: string, since: number): Promise<LiveResponse> {
    return this.get(`/experiments/${encodeURIComponent(experimentId)}/live?since=${since}`);
  }

  evaluation(experimentId: string, window?: number): Promise<EvaluationResponse> {
    const query = window === undefined ? "" : `?window=${window}`;
    return this.get(`/experiments/${encodeURIComponent(experimentId)}/evaluation${query}`);
  }

  retrain(options: { epochs?: number; seed?: number; wait?: boolean } = {}): Promise<unknown> {
    return this.post("/models/retrain", options);
  }

  modelsCurrent(): Promise<ModelsCurrentResponse> {
    return this.get("/models/current");
  }

  lifespan(query: LifespanQuery): Promise<LifespanResponse> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined) params.set(key, String(value));
    }
    return this.get(`/lifespan?${params.toString()}`);
  }
}
