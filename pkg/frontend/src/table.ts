// Loop table (label, contribution, members) and its CSV export.

import { SimplifiedCld } from "./simplify.js";

export interface LoopRow {
  label: string;
  contribution: number;
  aggregated: number;
  members: string;
}

export function loopRows(cld: SimplifiedCld): LoopRow[] {
  return cld.loops.map((lp) => ({
    label: lp.label,
    contribution: lp.composite_mean,
    aggregated: lp.contributing.length,
    members: [...lp.members, lp.members[0]].join(" -> "),
  }));
}

export function loopTableCsv(cld: SimplifiedCld): string {
  const lines = ["label,contribution_pct,loops_aggregated,members"];
  for (const row of loopRows(cld)) {
    lines.push(`${row.label},${row.contribution},${row.aggregated},${row.members}`);
  }
  lines.push(`explained_behavior,${cld.explained_pct},,`);
  return lines.join("\n") + "\n";
}
