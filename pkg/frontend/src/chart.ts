// Stacked relative-loop-score chart: how much of the behavior each loop of a
// partition explains at each step, with a scrub cursor.

import { Bundle, LoopInfo } from "./bundle.js";

export interface StackedChart {
  loops: LoopInfo[];
  /** per step, per loop: |relative score| segments, stacked in loop order */
  segments: number[][];
  /** per step: true when any loop in the partition carries a score */
  active: boolean[];
  totals: number[];
}

export function stackedChart(bundle: Bundle, partition: number): StackedChart {
  const loops = bundle.loops.filter((lp) => lp.partition === partition);
  const steps = bundle.time.length - 1;
  const segments: number[][] = [];
  const active: boolean[] = [];
  const totals: number[] = [];
  for (let t = 0; t <= steps; t++) {
    const row = loops.map((lp) => Math.abs(lp.relative[t]));
    segments.push(row);
    active.push(loops.some((lp) => lp.scores[t] !== 0));
    totals.push(row.reduce((a, b) => a + b, 0));
  }
  return { loops, segments, active, totals };
}

export function hasAnyActivity(chart: StackedChart): boolean {
  return chart.active.some(Boolean);
}

const PALETTE = [
  "#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed",
  "#0891b2", "#be185d", "#4d7c0f", "#b45309", "#1e40af",
];

export function renderChart(
  bundle: Bundle,
  chart: StackedChart,
  cursor: number,
  width = 640,
  height = 180,
): string {
  const steps = bundle.time.length - 1;
  const left = 40;
  const plotW = width - left - 10;
  const plotH = height - 30;
  const xOf = (t: number) => left + (plotW * t) / Math.max(1, steps);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}" font-family="sans-serif" font-size="11">`);
  parts.push(`<line x1="${left}" y1="${plotH}" x2="${width - 10}" y2="${plotH}" stroke="#94a3b8"/>`);
  parts.push(`<text x="4" y="12" fill="#475569">% of behavior</text>`);

  if (!hasAnyActivity(chart)) {
    parts.push(
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" ` +
      `fill="#64748b" font-size="14" data-role="no-loops">no loops reported</text>`);
  } else {
    for (let li = 0; li < chart.loops.length; li++) {
      const color = PALETTE[li % PALETTE.length];
      const pieces: string[] = [];
      for (let t = 1; t <= steps; t++) {
        let base = 0;
        for (let j = 0; j < li; j++) base += chart.segments[t][j];
        const y0 = plotH - (plotH * base) / 100;
        const y1 = plotH - (plotH * (base + chart.segments[t][li])) / 100;
        pieces.push(`M ${xOf(t).toFixed(1)} ${y0.toFixed(1)} L ${xOf(t).toFixed(1)} ${y1.toFixed(1)}`);
      }
      parts.push(
        `<path d="${pieces.join(" ")}" stroke="${color}" stroke-width="${Math.max(
          1, plotW / steps).toFixed(2)}" fill="none" opacity="0.85">` +
        `<title>${chart.loops[li].label}</title></path>`);
    }
  }
  const cx = xOf(Math.min(Math.max(cursor, 0), steps));
  parts.push(
    `<line x1="${cx.toFixed(1)}" y1="0" x2="${cx.toFixed(1)}" y2="${plotH}" ` +
    `stroke="#0f172a" stroke-dasharray="4 3" data-role="cursor"/>`);
  if (!chart.active[Math.min(Math.max(cursor, 0), steps)]) {
    parts.push(
      `<text x="${width - 10}" y="12" text-anchor="end" fill="#64748b" ` +
      `data-role="no-loops-now">no loops at this step</text>`);
  }
  parts.push(
    `<text x="${left}" y="${height - 6}" fill="#475569">t=${bundle.time[0]}</text>` +
    `<text x="${width - 10}" y="${height - 6}" text-anchor="end" fill="#475569">` +
    `t=${bundle.time[steps]}</text>`);
  parts.push("</svg>");
  return parts.join("");
}
