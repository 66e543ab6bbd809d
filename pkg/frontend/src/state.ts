// Explorer state: a loaded bundle plus the current view parameters.
// All transitions return new state; the bundle itself is never mutated.

import { Bundle, parseBundle } from "./bundle.js";
import { buildSimplifiedCld, SimplificationParams, SimplifiedCld } from "./simplify.js";

export interface ExplorerState {
  bundle: Bundle;
  params: SimplificationParams;
  timeIndex: number;
  partition: number;
  selected: Set<string>; // simplified loop labels to highlight
}

export const DEFAULT_PARAMS: SimplificationParams = {
  link_threshold: 0,
  loop_threshold: 0,
  keep_flows: true,
};

export function loadBundle(text: string): ExplorerState {
  const bundle = parseBundle(text);
  deepFreeze(bundle);
  return {
    bundle,
    params: { ...DEFAULT_PARAMS },
    timeIndex: bundle.time.length - 1,
    partition: bundle.partitions.length > 0 ? bundle.partitions[0].id : 0,
    selected: new Set(),
  };
}

export function resimplify(state: ExplorerState, params: SimplificationParams):
    { state: ExplorerState; cld: SimplifiedCld } {
  const next = { ...state, params: { ...params }, selected: new Set(state.selected) };
  const cld = buildSimplifiedCld(state.bundle, next.params);
  const labels = new Set(cld.loops.map((lp) => lp.label));
  next.selected = new Set([...next.selected].filter((l) => labels.has(l)));
  return { state: next, cld };
}

export function scrubTime(state: ExplorerState, timeIndex: number): ExplorerState {
  const max = state.bundle.time.length - 1;
  const clamped = Math.min(Math.max(Math.round(timeIndex), 0), max);
  return { ...state, timeIndex: clamped };
}

export function toggleLoop(state: ExplorerState, label: string): ExplorerState {
  const selected = new Set(state.selected);
  if (selected.has(label)) selected.delete(label);
  else selected.add(label);
  return { ...state, selected };
}

export function hasFeedback(state: ExplorerState): boolean {
  return state.bundle.loops.length > 0;
}

function deepFreeze(obj: unknown): void {
  if (obj === null || typeof obj !== "object") return;
  for (const value of Object.values(obj)) deepFreeze(value);
  Object.freeze(obj);
}
