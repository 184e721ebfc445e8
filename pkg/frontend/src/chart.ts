/** Chart state assembly and SVG path helpers.
 *
 * Pure data in, path strings out; band fill renders from the service-provided
 * lower/upper arrays, never recomputed client-side. Every series tag carries
 * the model version it came from.
 */

import type { Prediction, SamplePoint } from "./types.js";

export interface ChartSeries {
  label: string;
  x: number[];
  y: number[];
  modelVersion: number | null; // null for measured data
}

export interface BandFill {
  x: number[];
  lower: number[];
  upper: number[];
}

export interface ChartState {
  series: ChartSeries[];
  band: BandFill | null;
  xLabel: string;
  yLabel: string;
}

export function forecastChart(
  prediction: Prediction,
  target: "pressure" | "flow",
  measured: SamplePoint[] = [],
  band: BandFill | null = null,
): ChartState {
  const series: ChartSeries[] = [
    {
      label: `predicted ${target} (v${prediction.model_version})`,
      x: prediction.t,
      y: prediction[target],
      modelVersion: prediction.model_version,
    },
  ];
  if (measured.length > 0) {
    series.push({
      label: `measured ${target}`,
      x: measured.map((s) => s.t),
      y: measured.map((s) => s[target]),
      modelVersion: null,
    });
  }
  return {
    series,
    band,
    xLabel: "time [s]",
    yLabel: target === "pressure" ? "pressure [bar]" : "flow rate [dm^3/min]",
  };
}

export interface ViewBox {
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function fitViewBox(state: ChartState, width = 640, height = 320): ViewBox {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of state.series) {
    xs.push(...s.x);
    ys.push(...s.y);
  }
  if (state.band) {
    xs.push(...state.band.x);
    ys.push(...state.band.lower, ...state.band.upper);
  }
  if (xs.length === 0) {
    return { width, height, xMin: 0, xMax: 1, yMin: 0, yMax: 1 };
  }
  const pad = (lo: number, hi: number): [number, number] =>
    lo === hi ? [lo - 0.5, hi + 0.5] : [lo, hi];
  const [xMin, xMax] = pad(Math.min(...xs), Math.max(...xs));
  const [yMin, yMax] = pad(Math.min(...ys), Math.max(...ys));
  return { width, height, xMin, xMax, yMin, yMax };
}

function scale(view: ViewBox, x: number, y: number): [number, number] {
  const sx = ((x - view.xMin) / (view.xMax - view.xMin)) * view.width;
  const sy = view.height - ((y - view.yMin) / (view.yMax - view.yMin)) * view.height;
  return [sx, sy];
}

export function linePath(view: ViewBox, x: number[], y: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < x.length; i++) {
    const [sx, sy] = scale(view, x[i]!, y[i]!);
    parts.push(`${i === 0 ? "M" : "L"}${sx.toFixed(2)},${sy.toFixed(2)}`);
  }
  return parts.join(" ");
}

/** Closed polygon: upper bound left-to-right, lower bound back. */
export function bandPath(view: ViewBox, band: BandFill): string {
  if (band.x.length === 0) return "";
  const up = linePath(view, band.x, band.upper);
  const backX = [...band.x].reverse();
  const backY = [...band.lower].reverse();
  const down = linePath(view, backX, backY).replace(/^M/, "L");
  return `${up} ${down} Z`;
}
