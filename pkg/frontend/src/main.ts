// DOM wiring for the explorer. Everything interesting lives in the pure
// modules; this file only moves values between controls and renderers.

import { renderChart, stackedChart } from "./chart.js";
import { renderCld } from "./render.js";
import { buildSimplifiedCld, SimplifiedCld } from "./simplify.js";
import { ExplorerState, hasFeedback, loadBundle, scrubTime, toggleLoop } from "./state.js";
import { loopRows, loopTableCsv } from "./table.js";

let state: ExplorerState | null = null;
let cld: SimplifiedCld | null = null;
let debounceTimer: number | undefined;

const $ = (id: string) => document.getElementById(id)!;

function params() {
  return {
    link_threshold: Number(($("link-threshold") as HTMLInputElement).value),
    loop_threshold: Number(($("loop-threshold") as HTMLInputElement).value),
    keep_flows: ($("keep-flows") as HTMLInputElement).checked,
  };
}

function banner(message: string, isError = false) {
  const el = $("banner");
  el.textContent = message;
  el.className = isError ? "banner error" : "banner";
  el.hidden = message === "";
}

function refresh() {
  if (!state) return;
  cld = buildSimplifiedCld(state.bundle, params());
  $("explained").textContent =
    `simplified CLD explains ${cld.explained_pct.toFixed(1)}% of model behavior ` +
    `(${cld.loops.length} loops from ${cld.loops.reduce((n, lp) => n + lp.contributing.length, 0)} full loops)`;
  $("cld").innerHTML = renderCld(cld, state.timeIndex, state.selected);
  const chart = stackedChart(state.bundle, state.partition);
  $("chart").innerHTML = renderChart(state.bundle, chart, state.timeIndex);
  $("time-label").textContent = `t = ${state.bundle.time[state.timeIndex]}`;
  renderTable();
  banner(hasFeedback(state) ? "" : "no feedback loops in this model");
}

function renderTable() {
  if (!state || !cld) return;
  const body = $("loop-rows");
  body.innerHTML = "";
  for (const row of loopRows(cld)) {
    const tr = document.createElement("tr");
    const selected = state.selected.has(row.label);
    tr.innerHTML =
      `<td><button data-loop="${row.label}" class="${selected ? "on" : ""}">${row.label}</button></td>` +
      `<td>${row.contribution.toFixed(2)}%</td><td>${row.aggregated}</td><td>${row.members}</td>`;
    body.appendChild(tr);
  }
  body.querySelectorAll("button[data-loop]").forEach((btn) => {
    btn.addEventListener("click", () => {
      if (!state) return;
      state = toggleLoop(state, (btn as HTMLElement).dataset.loop!);
      refresh();
    });
  });
}

function scheduleRefresh() {
  window.clearTimeout(debounceTimer);
  debounceTimer = window.setTimeout(refresh, 60);
}

function download(name: string, text: string, type: string) {
  const blob = new Blob([text], { type });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

function wire() {
  ($("bundle-file") as HTMLInputElement).addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      state = loadBundle(await file.text());
      const scrub = $("time-scrub") as HTMLInputElement;
      scrub.max = String(state.bundle.time.length - 1);
      scrub.value = String(state.timeIndex);
      banner("");
      $("model-name").textContent =
        `${state.bundle.model.path} (${state.bundle.sim.steps} steps, ` +
        `${state.bundle.loops.length} loops)`;
      refresh();
    } catch (err) {
      state = null;
      banner(`could not load bundle: ${(err as Error).message}`, true);
    }
  });
  for (const id of ["link-threshold", "loop-threshold"]) {
    $(id).addEventListener("input", () => {
      $(`${id}-value`).textContent = `${($(id) as HTMLInputElement).value}%`;
      scheduleRefresh();
    });
  }
  $("keep-flows").addEventListener("change", scheduleRefresh);
  $("time-scrub").addEventListener("input", () => {
    if (!state) return;
    state = scrubTime(state, Number(($("time-scrub") as HTMLInputElement).value));
    refresh();
  });
  $("export-svg").addEventListener("click", () => {
    if (cld && state) download("cld.svg", renderCld(cld, state.timeIndex, state.selected),
                               "image/svg+xml");
  });
  $("export-csv").addEventListener("click", () => {
    if (cld) download("loops.csv", loopTableCsv(cld), "text/csv");
  });
}

wire();
