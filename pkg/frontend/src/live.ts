/** Live monitor: polls the incremental `since` cursor, never renders a
 * duplicate point, and flips a stale-data indicator on network failures. */

import { TwinApi } from "./api.js";
import type { Prediction, SamplePoint } from "./types.js";

export interface LiveState {
  samples: SamplePoint[];
  prediction: Prediction | null;
  status: "open" | "complete";
  stale: boolean;
  polls: number;
}

export class LiveMonitor {
  private cursor = -1;
  readonly state: LiveState = {
    samples: [],
    prediction: null,
    status: "open",
    stale: false,
    polls: 0,
  };
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: TwinApi,
    private readonly experimentId: string,
    private readonly onComplete?: (state: LiveState) => void,
    readonly intervalMs = 500,
  ) {}

  /** One poll step; the interval loop just calls this. */
  async tick(): Promise<void> {
    this.state.polls += 1;
    let response;
    try {
      response = await this.api.live(this.experimentId, this.cursor);
    } catch {
      this.state.stale = true; // keep polling; next success clears the flag
      return;
    }
    this.state.stale = false;
    // The cursor is monotone; anything at or before it was already rendered.
    const fresh = response.samples.filter((s) => s.t > this.cursor);
    this.state.samples.push(...fresh);
    if (fresh.length > 0) {
      this.cursor = fresh[fresh.length - 1]!.t;
    }
    if (response.prediction) {
      this.state.prediction = response.prediction;
    }
    const wasOpen = this.state.status === "open";
    this.state.status = response.status;
    if (wasOpen && response.status === "complete") {
      this.stop();
      this.onComplete?.(this.state);
    }
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
