// Analysis bundle types, mirroring the JSON emitted by `sdloops analyze`.

export interface VariableInfo {
  name: string;
  kind: "stock" | "conveyor" | "flow" | "aux" | "const" | "graphical";
  hidden: boolean;
  inflows: string[];
  outflows: string[];
  nonneg: boolean;
}

export interface EdgeInfo {
  source: string;
  target: string;
  kind: "equation" | "flow" | "constraint" | "crossing";
  scores: number[];
  relative: number[];
  invalid_steps: number;
  pathways?: string[][];
  chosen?: number[];
}

export interface LoopInfo {
  id: string;
  members: string[];
  edge_kinds: string[];
  partition: number;
  provenance: "enumerated" | "strongest-path" | "user-declared";
  declared_as: string | null;
  label: string;
  active: boolean;
  mean_abs_relative: number;
  scores: number[];
  relative: number[];
}

export interface PartitionInfo {
  id: number;
  members: string[];
  mode: "enumerated" | "strongest-path";
  any_active: boolean;
}

export interface Bundle {
  schema_version: string;
  tool: { name: string; version: string };
  model: { path: string; source: string; digest: string };
  sim: { start: number; stop: number; dt: number; steps: number };
  overrides: Record<string, number>;
  loop_cap: number;
  time: number[];
  variables: VariableInfo[];
  partitions: PartitionInfo[];
  edges: EdgeInfo[];
  loops: LoopInfo[];
  declared_paths: { name: string; members: string[]; scores: number[] }[];
  macros: unknown[];
  trace: unknown;
}

const REQUIRED = ["time", "edges", "loops", "variables", "partitions", "sim"] as const;

/** Validate an untrusted parsed JSON value; returns an error message or null. */
export function bundleProblem(data: unknown): string | null {
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    return "bundle is not a JSON object";
  }
  const obj = data as Record<string, unknown>;
  const version = obj["schema_version"];
  if (typeof version !== "string" || !version.includes(".")) {
    return "bundle has no schema_version";
  }
  if (version.split(".", 1)[0] !== "1") {
    return `unsupported bundle schema version ${version}`;
  }
  for (const key of REQUIRED) {
    if (!(key in obj)) return `bundle is missing '${key}'`;
  }
  if (!Array.isArray(obj["time"]) || (obj["time"] as unknown[]).length < 2) {
    return "bundle has an empty time axis";
  }
  return null;
}

export function parseBundle(text: string): Bundle {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (err) {
    throw new Error(`not valid JSON: ${(err as Error).message}`);
  }
  const problem = bundleProblem(data);
  if (problem !== null) throw new Error(problem);
  return data as Bundle;
}
