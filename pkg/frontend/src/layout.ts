// Circular layout per weakly-connected component, components tiled left to right.

import { SimplifiedCld } from "./simplify.js";

export interface NodePosition {
  x: number;
  y: number;
}

export interface Layout {
  positions: Map<string, NodePosition>;
  width: number;
  height: number;
}

export function componentsOf(nodes: string[], links: [string, string][]): string[][] {
  const parent = new Map<string, string>(nodes.map((n) => [n, n]));
  const find = (x: string): string => {
    let root = x;
    while (parent.get(root) !== root) root = parent.get(root)!;
    return root;
  };
  for (const [a, b] of links) {
    if (parent.has(a) && parent.has(b)) parent.set(find(a), find(b));
  }
  const byRoot = new Map<string, string[]>();
  for (const n of nodes) {
    const r = find(n);
    const group = byRoot.get(r);
    if (group) group.push(n);
    else byRoot.set(r, [n]);
  }
  return [...byRoot.values()]
    .map((group) => group.sort())
    .sort((a, b) => (a[0] < b[0] ? -1 : 1));
}

export function layoutCld(cld: SimplifiedCld): Layout {
  const pads = 70;
  const positions = new Map<string, NodePosition>();
  const comps = componentsOf(cld.retained, cld.links.map((l) => [l.source, l.target]));
  let xOffset = 0;
  let height = 2 * pads;
  for (const comp of comps) {
    const radius = Math.max(60, 26 * comp.length);
    const cx = xOffset + radius + pads;
    const cy = radius + pads;
    comp.forEach((name, i) => {
      const angle = (2 * Math.PI * i) / comp.length - Math.PI / 2;
      positions.set(name, {
        x: cx + radius * Math.cos(angle),
        y: cy + radius * Math.sin(angle),
      });
    });
    xOffset = cx + radius + pads;
    height = Math.max(height, 2 * (radius + pads));
  }
  return { positions, width: Math.max(xOffset, 2 * pads), height };
}
