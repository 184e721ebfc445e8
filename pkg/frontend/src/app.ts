/** DOM wiring for the operator console. All numbers rendered here come from
 * service responses; the only client-side math is chart scaling. */

import { TwinApi } from "./api.js";
import { bandPath, fitViewBox, forecastChart, linePath, type ChartState } from "./chart.js";
import { serviceBaseUrl } from "./config.js";
import { cardCells, evaluationCard, METRIC_FIELDS, METRIC_LABELS } from "./evaluation.js";
import { ExperimentForm } from "./form.js";
import { LifespanExplorer } from "./lifespan.js";
import { LiveMonitor } from "./live.js";
import type { FormValues } from "./validation.js";

const SERIES_COLORS = ["#1c5d99", "#bb4430"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderChart(target: SVGSVGElement, state: ChartState): void {
  const view = fitViewBox(state);
  target.setAttribute("viewBox", `0 0 ${view.width} ${view.height}`);
  target.innerHTML = "";
  if (state.band) {
    const fill = document.createElementNS("http://www.w3.org/2000/svg", "path");
    fill.setAttribute("d", bandPath(view, state.band));
    fill.setAttribute("fill", "#9bb8d3");
    fill.setAttribute("opacity", "0.4");
    fill.setAttribute("stroke", "none");
    target.appendChild(fill);
  }
  state.series.forEach((series, index) => {
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", linePath(view, series.x, series.y));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", SERIES_COLORS[index % SERIES_COLORS.length]!);
    path.setAttribute("stroke-width", series.modelVersion === null ? "1" : "2");
    if (series.modelVersion === null) path.setAttribute("stroke-dasharray", "3,2");
    path.setAttribute("data-label", series.label);
    target.appendChild(path);
  });
}

function renderEvaluationCard(container: HTMLElement, card: ReturnType<typeof evaluationCard>) {
  const head = METRIC_FIELDS.map((f) => `<th>${METRIC_LABELS[f]}</th>`).join("");
  const body = cardCells(card)
    .map(
      (row) =>
        `<tr><td>${row.target}</td>${row.cells.map((v) => `<td>${v}</td>`).join("")}</tr>`,
    )
    .join("");
  container.innerHTML =
    `<h3>Evaluation (window ${card.window}, model v${card.modelVersion})</h3>` +
    `<table><thead><tr><th>target</th>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function bootstrap(): void {
  const api = new TwinApi(serviceBaseUrl());
  const form = new ExperimentForm(api);
  const lifespan = new LifespanExplorer(api);
  let monitor: LiveMonitor | null = null;

  const fields: (keyof FormValues)[] = [
    "experiment_id",
    "concentration",
    "plate_count",
    "end_pressure",
    "cloth_cycles",
  ];
  const submit = el<HTMLButtonElement>("submit");
  const formErrors = el<HTMLUListElement>("form-errors");

  function refreshForm(): void {
    const violations = form.violations();
    submit.disabled = !form.canSubmit();
    formErrors.innerHTML = violations
      .map((v) => `<li data-field="${v.field}">${v.rule}</li>`)
      .join("");
  }

  for (const field of fields) {
    const input = el<HTMLInputElement>(field);
    input.addEventListener("input", () => {
      if (field === "experiment_id") form.set(field, input.value);
      else form.set(field, Number(input.value));
      refreshForm();
    });
  }

  submit.addEventListener("click", async () => {
    const outcome = await form.submit();
    refreshForm();
    if (!outcome.ok || !outcome.forecast) return;
    const { forecast } = outcome;
    el("forecast-note").textContent = forecast.estimatedDuration === null
      ? "estimated duration: exceeds horizon"
      : `estimated duration: ${forecast.estimatedDuration.toFixed(1)} s (model v${forecast.modelVersion})`;
    renderChart(
      el("chart-pressure") as unknown as SVGSVGElement,
      forecastChart(forecast.prediction, "pressure"),
    );

    monitor?.stop();
    monitor = new LiveMonitor(api, forecast.experimentId, async (state) => {
      el("live-note").textContent =
        `cycle complete (${state.samples.length} samples); fetching evaluation`;
      const evaluation = await api.evaluation(forecast.experimentId);
      renderEvaluationCard(el("evaluation-card"), evaluationCard(evaluation));
    });
    monitor.start();
    const pollTimer = setInterval(() => {
      const state = monitor?.state;
      if (!state) return;
      el("live-note").textContent =
        `${state.samples.length} samples` + (state.stale ? " (stale: retrying)" : "");
      renderChart(
        el("chart-pressure") as unknown as SVGSVGElement,
        forecastChart(forecast.prediction, "pressure", state.samples),
      );
      if (state.status === "complete") clearInterval(pollTimer);
    }, 1000);
  });

  el<HTMLButtonElement>("retrain").addEventListener("click", async () => {
    await api.retrain({});
    el("registry-note").textContent = "retraining started";
  });

  el<HTMLButtonElement>("lifespan-run").addEventListener("click", async () => {
    lifespan.set("concentration", Number(el<HTMLInputElement>("ls-concentration").value));
    lifespan.set("plate_count", Number(el<HTMLInputElement>("ls-plates").value));
    lifespan.set("end_pressure", Number(el<HTMLInputElement>("ls-end").value));
    lifespan.set("flow_floor", Number(el<HTMLInputElement>("ls-floor").value));
    lifespan.set("k_max", Number(el<HTMLInputElement>("ls-kmax").value));
    const outcome = await lifespan.query();
    const target = el("lifespan-result");
    if (outcome.kind === "no-model") {
      target.textContent = "train a model first";
    } else if (outcome.kind === "error") {
      target.textContent = outcome.message;
    } else {
      const rec = outcome.view.recommendation;
      target.innerHTML =
        `<p>recommended replacement cycle: <strong>${rec}</strong></p>` +
        `<table><thead><tr><th>cycle</th><th>duration [s]</th><th>max flow</th><th>violates</th></tr></thead><tbody>` +
        outcome.view.points
          .map(
            (p) =>
              `<tr><td>${p.cycles}</td><td>${p.duration ?? "&gt; horizon"}</td>` +
              `<td>${p.max_flow}</td><td>${p.violates ? "yes" : ""}</td></tr>`,
          )
          .join("") +
        "</tbody></table>";
    }
  });

  refreshForm();
}

if (typeof document !== "undefined" && document.getElementById("submit")) {
  bootstrap();
}
