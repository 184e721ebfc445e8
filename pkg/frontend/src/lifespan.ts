/** Cloth-lifespan what-if explorer: adjust thresholds, re-query, read the
 * recommended replacement cycle (or an explicit "none within sweep"). */

import { ApiError, TwinApi } from "./api.js";
import type { LifespanResponse } from "./types.js";

export interface LifespanInputs {
  concentration: number;
  plate_count: number;
  end_pressure: number;
  k_max: number;
  flow_floor: number;
  duration_cap_factor: number;
}

export interface LifespanView {
  points: LifespanResponse["points"];
  recommendation: number | "none within sweep";
  modelVersion: number;
  flowFloor: number;
  durationCap: number | null;
}

export type LifespanOutcome =
  | { kind: "ok"; view: LifespanView }
  | { kind: "no-model" }
  | { kind: "error"; message: string };

export class LifespanExplorer {
  inputs: LifespanInputs = {
    concentration: 12.5,
    plate_count: 2,
    end_pressure: 10,
    k_max: 40,
    flow_floor: 8,
    duration_cap_factor: 1.5,
  };

  constructor(private readonly api: TwinApi) {}

  set<K extends keyof LifespanInputs>(field: K, value: LifespanInputs[K]): void {
    this.inputs[field] = value;
  }

  async query(): Promise<LifespanOutcome> {
    try {
      const response = await this.api.lifespan({ ...this.inputs });
      return { kind: "ok", view: toView(response) };
    } catch (error) {
      if (error instanceof ApiError && error.status === 503) {
        return { kind: "no-model" }; // rendered as "train a model first"
      }
      if (error instanceof ApiError) {
        return { kind: "error", message: error.message };
      }
      throw error;
    }
  }
}

export function toView(response: LifespanResponse): LifespanView {
  return {
    points: response.points,
    recommendation: response.recommended_cycle ?? "none within sweep",
    modelVersion: response.model_version,
    flowFloor: response.flow_floor,
    durationCap: response.duration_cap,
  };
}
