/**
 * DOM rendering. Pure functions from the view-model to elements; every
 * displayed number is read off the flow's API-derived accessors.
 */

import { CandidateRow } from "./api.js";
import { SessionFlow } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function formatProb(value: number | null): string {
  return value === null ? "-" : value.toFixed(3);
}

function option(label: string, value: string): HTMLOptionElement {
  const node = document.createElement("option");
  node.value = value;
  node.textContent = label;
  return node;
}

export function renderGauge(value: number | null): HTMLElement {
  const wrap = el("div", "gauge");
  wrap.dataset.value = value === null ? "" : String(value);
  const label = el("div", "gauge-label", formatProb(value));
  const track = el("div", "gauge-track");
  const fill = el("div", "gauge-fill");
  fill.style.width = value === null ? "0%" : `${(value * 100).toFixed(1)}%`;
  track.appendChild(fill);
  wrap.append(label, track);
  return wrap;
}

function renderDrawDetail(row: CandidateRow): HTMLTableRowElement {
  const detail = el("tr", "draw-detail");
  detail.dataset.feature = row.feature;
  const cell = document.createElement("td");
  cell.colSpan = 5;
  const outcomes = el(
    "div",
    "draws",
    `sampled outcomes: ${row.outcomes.map(String).join(", ")}`,
  );
  const posteriors = el(
    "div",
    "draws",
    `posterior draws: ${row.posterior_draws.map((p) => p.toFixed(3)).join(", ")}`,
  );
  cell.append(outcomes, posteriors);
  detail.appendChild(cell);
  return detail;
}

export function renderCandidateTable(flow: SessionFlow): HTMLElement {
  const recommendation = flow.recommendation;
  const table = el("table", "candidates");
  const head = el("tr");
  for (const title of ["test", "expected KL", "utility", "entropy gain", ""]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  const fractions = flow.klBarFractions();
  for (const row of flow.candidateRows()) {
    const tr = el("tr", "candidate");
    tr.dataset.feature = row.feature;
    if (row.feature === recommendation?.recommended) {
      tr.classList.add("recommended");
    }
    if (row.failed) tr.classList.add("failed");

    const name = el("td", "feature-name", row.feature);
    const kl = el("td", "kl-cell");
    const bar = el("span", "kl-bar");
    const fraction = fractions.get(row.feature) ?? 0;
    bar.style.width = `${(fraction * 100).toFixed(1)}%`;
    bar.style.opacity = String(0.25 + 0.75 * fraction);
    kl.append(bar, el("span", "kl-value", row.expected_kl.toFixed(4)));
    const utility = el("td", undefined, row.utility.toFixed(4));
    const entropy = el("td", undefined, row.entropy_eig.toFixed(4));
    const expand = el("td");
    const button = el("button", "expand", "draws");
    button.dataset.feature = row.feature;
    let detailRow: HTMLTableRowElement | null = null;
    button.addEventListener("click", () => {
      if (detailRow?.parentElement) {
        detailRow.remove();
        detailRow = null;
      } else {
        detailRow = renderDrawDetail(row);
        tr.after(detailRow);
      }
    });
    expand.appendChild(button);
    tr.append(name, kl, utility, entropy, expand);
    table.appendChild(tr);
  }
  return table;
}

export function renderStopBanner(flow: SessionFlow): HTMLElement {
  const recommendation = flow.recommendation!;
  const best = flow.candidateRows()[0];
  const banner = el("div", "stop-banner");
  banner.appendChild(el("h3", undefined, "Stopping criterion met"));
  banner.appendChild(
    el(
      "p",
      undefined,
      `Best expected KL ${best ? best.expected_kl.toFixed(4) : "0"} is below ` +
        `the threshold ${recommendation.stop_threshold.toFixed(4)}; no remaining ` +
        `test is expected to move the belief meaningfully.`,
    ),
  );
  const conclude = el("button", "conclude", "Conclude");
  conclude.addEventListener("click", () => flow.conclude());
  const proceed = el("button", "continue-anyway", "Continue anyway");
  proceed.addEventListener("click", () => flow.continueAnyway());
  banner.append(conclude, proceed);
  return banner;
}

export function renderEntryForm(flow: SessionFlow): HTMLElement {
  const entry = flow.entry!;
  const kind = flow.featureKind(entry.feature);
  const unit = flow.featureUnit(entry.feature);
  const form = el("form", "result-entry");
  form.appendChild(
    el(
      "h3",
      undefined,
      `Enter result for ${entry.feature}${entry.override ? " (override)" : ""}`,
    ),
  );
  let input: HTMLInputElement | HTMLSelectElement;
  if (kind === "categorical") {
    input = document.createElement("select");
    for (const category of flow.featureCategories(entry.feature)) {
      const option = document.createElement("option");
      option.value = category;
      option.textContent = category;
      input.appendChild(option);
    }
  } else {
    input = document.createElement("input");
    input.type = "text";
    input.placeholder = unit ? `value in ${unit}` : "numeric value";
  }
  input.name = "value";
  form.appendChild(input);
  if (unit) form.appendChild(el("span", "unit", unit));
  if (entry.validationMessage) {
    form.appendChild(el("div", "validation-error", entry.validationMessage));
  }
  const submit = el("button", "submit-result", "Submit");
  submit.type = "submit";
  const cancel = el("button", "cancel", "Back");
  cancel.type = "button";
  cancel.addEventListener("click", () => flow.cancelEntry());
  form.append(submit, cancel);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void flow.submit(input.value);
  });
  return form;
}

export function renderTrajectoryChart(flow: SessionFlow): HTMLElement {
  const series = flow.beliefSeries();
  const wrap = el("div", "trajectory");
  wrap.dataset.steps = String(flow.trajectoryStepCount());
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 220 110");
  svg.setAttribute("class", "trajectory-chart");
  const width = 200;
  const points = series
    .map((p, i) => {
      const x = 10 + (series.length > 1 ? (i / (series.length - 1)) * width : 0);
      const y = 105 - p * 100;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.appendChild(line);
  for (const [i, p] of series.entries()) {
    const circle = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    const x = 10 + (series.length > 1 ? (i / (series.length - 1)) * width : 0);
    circle.setAttribute("cx", x.toFixed(1));
    circle.setAttribute("cy", (105 - p * 100).toFixed(1));
    circle.setAttribute("r", "3");
    circle.setAttribute("data-belief", String(p));
    svg.appendChild(circle);
  }
  wrap.appendChild(svg);
  return wrap;
}

export function renderSessionScreen(flow: SessionFlow): HTMLElement {
  const session = flow.session!;
  const screen = el("div", "session-screen");
  const header = el("div", "session-header");
  header.appendChild(el("h2", undefined, session.disease));
  header.appendChild(
    el(
      "span",
      "session-meta",
      `status: ${session.status} | acquired ${session.acquired}/${session.budget} | ` +
        `theta ${session.policy.theta} gamma ${session.policy.gamma}`,
    ),
  );
  screen.appendChild(header);

  const known = el("div", "known-summary");
  known.appendChild(el("h3", undefined, "Known"));
  for (const [name, value] of Object.entries(session.known)) {
    known.appendChild(el("div", "known-item", `${name}: ${value}`));
  }
  screen.appendChild(known);

  screen.appendChild(renderGauge(flow.gaugeValue()));

  if (flow.phase === "stopped") screen.appendChild(renderStopBanner(flow));
  if (flow.recommendation) screen.appendChild(renderCandidateTable(flow));

  if (flow.phase === "review" && flow.recommendation?.recommended) {
    const actions = el("div", "actions");
    const accept = el(
      "button",
      "accept",
      `Accept: ${flow.recommendation.recommended}`,
    );
    accept.addEventListener("click", () => flow.accept());
    actions.appendChild(accept);
    const picker = document.createElement("select");
    picker.className = "override-picker";
    picker.appendChild(option("override with...", ""));
    for (const feature of session.unknown) {
      if (feature !== flow.recommendation.recommended) {
        picker.appendChild(option(feature, feature));
      }
    }
    picker.addEventListener("change", () => {
      if (picker.value) flow.override(picker.value);
    });
    actions.appendChild(picker);
    screen.appendChild(actions);
  }

  if (flow.phase === "entry" && flow.entry) {
    screen.appendChild(renderEntryForm(flow));
  }

  screen.appendChild(renderTrajectoryChart(flow));
  return screen;
}

export function renderApp(root: HTMLElement, flow: SessionFlow): void {
  root.textContent = "";
  if (flow.phase === "error") {
    const banner = el("div", "error-banner");
    banner.appendChild(el("p", undefined, flow.lastError ?? "service unreachable"));
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", () => {
      if (flow.session) void flow.refreshRecommendation();
      else void flow.loadDatasets();
    });
    banner.appendChild(retry);
    root.appendChild(banner);
    return;
  }
  if (flow.phase === "finished") {
    const done = el("div", "finished");
    done.appendChild(el("h2", undefined, "Session concluded"));
    done.appendChild(
      el("p", undefined, `Final belief: ${formatProb(flow.gaugeValue())}`),
    );
    done.appendChild(renderTrajectoryChart(flow));
    root.appendChild(done);
    return;
  }
  if (!flow.session) {
    root.appendChild(renderStartScreen(flow));
    return;
  }
  if (flow.phase === "loading") {
    root.appendChild(el("div", "loading", "working..."));
    return;
  }
  root.appendChild(renderSessionScreen(flow));
}

export function renderStartScreen(flow: SessionFlow): HTMLElement {
  const screen = el("div", "start-screen");
  screen.appendChild(el("h2", undefined, "Start a session"));
  const datasetPicker = document.createElement("select");
  datasetPicker.className = "dataset-picker";
  for (const dataset of flow.datasets) {
    datasetPicker.appendChild(option(`${dataset.name} (${dataset.disease})`, dataset.name));
  }
  const patientPicker = document.createElement("select");
  patientPicker.className = "patient-picker";
  const fillPatients = () => {
    patientPicker.textContent = "";
    const dataset = flow.datasets.find((d) => d.name === datasetPicker.value);
    for (const pid of dataset?.patients ?? []) {
      patientPicker.appendChild(option(pid, pid));
    }
  };
  datasetPicker.addEventListener("change", fillPatients);
  fillPatients();
  const gamma = document.createElement("input");
  gamma.type = "text";
  gamma.value = "0.3";
  gamma.className = "gamma-input";
  const start = el("button", "start", "Start");
  start.addEventListener("click", () => {
    void flow.start({
      dataset: datasetPicker.value,
      patient_id: patientPicker.value,
      gamma: Number(gamma.value),
    });
  });
  screen.append(datasetPicker, patientPicker, gamma, start);
  return screen;
}
