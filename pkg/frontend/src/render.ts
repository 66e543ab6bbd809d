// SVG rendering of a simplified CLD. Pure string generation so it is
// testable without a DOM; the app injects the result via innerHTML.

import { layoutCld } from "./layout.js";
import { SimplifiedCld, SimplifiedLink } from "./simplify.js";

const COLORS: Record<SimplifiedLink["polarity"], string> = {
  "+": "#2563eb",
  "-": "#dc2626",
  mixed: "#9ca3af",
};

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function linkWidth(link: SimplifiedLink, timeIndex: number | null): number {
  const raw = timeIndex === null ? link.strength : Math.abs(link.series[timeIndex]);
  return Math.min(6, Math.max(0.75, raw * 2));
}

function linkColor(link: SimplifiedLink, timeIndex: number | null): string {
  if (link.polarity === "mixed") return COLORS.mixed;
  if (timeIndex === null) return COLORS[link.polarity];
  const x = link.series[timeIndex];
  if (x === 0) return "#d1d5db";
  return x > 0 ? COLORS["+"] : COLORS["-"];
}

/**
 * Render the CLD at a time index (null = run-average view). Loops whose
 * member lists appear in `highlight` get their edges emphasized.
 */
export function renderCld(
  cld: SimplifiedCld,
  timeIndex: number | null = null,
  highlight: Set<string> = new Set(),
): string {
  const { positions, width, height } = layoutCld(cld);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}" font-family="sans-serif" font-size="13">`);
  parts.push(
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
    `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
    `<path d="M 0 0 L 10 5 L 0 10 z" fill="context-stroke"/></marker></defs>`);

  const highlighted = new Set<string>();
  for (const loop of cld.loops) {
    if (!highlight.has(loop.label)) continue;
    const closed = loop.members.concat([loop.members[0]]);
    for (let i = 0; i < closed.length - 1; i++) {
      highlighted.add(`${closed[i]}->${closed[i + 1]}`);
    }
  }

  for (const link of cld.links) {
    const a = positions.get(link.source);
    const b = positions.get(link.target);
    if (!a || !b) continue;
    const dx = b.x - a.x;
    const dy = b.y - a.y;
    const bend = 0.18;
    const mx = (a.x + b.x) / 2 - dy * bend;
    const my = (a.y + b.y) / 2 + dx * bend;
    const emphasized = highlighted.has(`${link.source}->${link.target}`);
    const width2 = linkWidth(link, timeIndex) + (emphasized ? 1.5 : 0);
    const color = emphasized ? "#f59e0b" : linkColor(link, timeIndex);
    parts.push(
      `<path d="M ${a.x.toFixed(1)} ${a.y.toFixed(1)} Q ${mx.toFixed(1)} ` +
      `${my.toFixed(1)} ${b.x.toFixed(1)} ${b.y.toFixed(1)}" fill="none" ` +
      `stroke="${color}" stroke-width="${width2.toFixed(2)}" marker-end="url(#arrow)"/>`);
    const sign = link.polarity === "mixed" ? "?" : link.polarity;
    parts.push(
      `<text x="${mx.toFixed(1)}" y="${(my - 4).toFixed(1)}" fill="${color}" ` +
      `text-anchor="middle">${sign}</text>`);
  }

  for (const name of cld.retained) {
    const p = positions.get(name);
    if (!p) continue;
    const label = escapeXml(name);
    const w = Math.max(60, 8 * name.length + 16);
    parts.push(
      `<g><rect x="${(p.x - w / 2).toFixed(1)}" y="${(p.y - 14).toFixed(1)}" ` +
      `width="${w}" height="28" rx="6" fill="#f8fafc" stroke="#334155"/>` +
      `<text x="${p.x.toFixed(1)}" y="${(p.y + 4).toFixed(1)}" ` +
      `text-anchor="middle" fill="#0f172a">${label}</text></g>`);
  }
  parts.push("</svg>");
  return parts.join("");
}
