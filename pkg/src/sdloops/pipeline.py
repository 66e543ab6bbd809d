"""End-to-end analysis: parse -> expand -> simulate -> score -> loops -> bundle."""

from __future__ import annotations

import hashlib
import os

from . import __version__
from .bundle import SCHEMA_VERSION
from .engine import simulate
from .graph import build_causal_graph, find_partitions
from .loops import DEFAULT_LOOP_CAP, build_loop_records
from .macros import expand_macros
from .model import DEFAULT_STEP_CAP, ModelIR, set_constant
from .parser import parse_model, serialize_model
from .scores import compute_scores, path_score_series


def analyze_source(text: str, *, path_label: str = "<memory>",
                   overrides: dict[str, float] | None = None,
                   loop_cap: int = DEFAULT_LOOP_CAP,
                   declared_extra: list[tuple[str, tuple[str, ...]]] | None = None,
                   include_trace: bool = False,
                   step_cap: int = DEFAULT_STEP_CAP) -> dict:
    ir = parse_model(text)
    return analyze_model(ir, source_text=text, path_label=path_label,
                         overrides=overrides, loop_cap=loop_cap,
                         declared_extra=declared_extra,
                         include_trace=include_trace, step_cap=step_cap)


def analyze_model(ir: ModelIR, *, source_text: str | None = None,
                  path_label: str = "<memory>",
                  overrides: dict[str, float] | None = None,
                  loop_cap: int = DEFAULT_LOOP_CAP,
                  declared_extra: list[tuple[str, tuple[str, ...]]] | None = None,
                  include_trace: bool = False,
                  step_cap: int = DEFAULT_STEP_CAP) -> dict:
    """Run the full analysis and assemble the bundle dictionary.

    The result is fully deterministic: repeated runs over the same inputs
    produce identical bundles.
    """
    canonical = serialize_model(ir)
    digest = "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()
    if source_text is None:
        source_text = canonical

    overrides = dict(overrides or {})
    for name, value in overrides.items():
        ir = set_constant(ir, name, value)

    em = expand_macros(ir)
    graph = build_causal_graph(em)
    trace = simulate(em, step_cap=step_cap)
    scores = compute_scores(em, graph, trace)

    declared = list(ir.declared_loops) + list(declared_extra or [])
    records, modes = build_loop_records(graph, scores, declared, cap=loop_cap)

    partitions = []
    for part in find_partitions(graph):
        partitions.append({
            "id": part.id,
            "members": list(part.members),
            "mode": modes.get(part.id, "enumerated"),
            "any_active": any(r.active for r in records if r.partition == part.id),
        })

    edges_json = []
    for edge in sorted(graph.edges, key=lambda e: (e.source, e.target, e.kind)):
        entry = {
            "source": edge.source,
            "target": edge.target,
            "kind": edge.kind,
            "scores": [float(x) for x in scores.visible[edge]],
            "relative": [float(x) for x in scores.relative[edge]],
            "invalid_steps": int(scores.invalid.get(edge, 0)),
        }
        if edge.kind == "crossing":
            entry["pathways"] = [list(p.nodes) for p in graph.pathways[edge]]
            entry["chosen"] = [int(i) for i in scores.chosen_pathway[edge]]
        edges_json.append(entry)

    loops_json = []
    for i, rec in enumerate(records):
        loops_json.append({
            "id": f"L{i}",
            "members": list(rec.members),
            "edge_kinds": [e.kind for e in rec.edges],
            "partition": rec.partition,
            "provenance": rec.provenance,
            "declared_as": rec.declared_as,
            "label": rec.label,
            "active": rec.active,
            "mean_abs_relative": float(rec.mean_abs_relative),
            "scores": [float(x) for x in rec.scores],
            "relative": [float(x) for x in rec.relative],
        })

    paths_json = []
    for name, members in ir.declared_paths:
        series = path_score_series(graph, scores, members)
        paths_json.append({
            "name": name,
            "members": list(members),
            "scores": [float(x) for x in series],
        })

    macros_json = []
    for inst in em.instances:
        macros_json.append({
            "id": inst.id,
            "kind": inst.kind,
            "owner": inst.owner,
            "output": inst.output,
            "pathways": {arg: [list(p) for p in pws] for arg, pws in sorted(inst.pathways.items())},
            "internal_loops": [list(c) for c in inst.internal_loops],
        })

    variables_json = []
    for v in em.variables:
        variables_json.append({
            "name": v.name,
            "kind": v.kind,
            "hidden": v.name.startswith("~"),
            "inflows": list(v.inflows),
            "outflows": list(v.outflows),
            "nonneg": bool(v.nonneg),
        })

    trace_json = None
    if include_trace:
        trace_json = {
            "values": {name: [float(x) for x in col] for name, col in sorted(trace.values.items())},
            "binding": {name: [int(x) for x in col] for name, col in sorted(trace.binding.items())},
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "sdloops", "version": __version__},
        "model": {"path": os.path.basename(path_label), "source": source_text, "digest": digest},
        "sim": {"start": ir.sim.start, "stop": ir.sim.stop, "dt": ir.sim.dt, "steps": trace.steps},
        "overrides": {k: float(v) for k, v in sorted(overrides.items())},
        "loop_cap": loop_cap,
        "time": [float(t) for t in trace.times],
        "variables": variables_json,
        "partitions": partitions,
        "edges": edges_json,
        "loops": loops_json,
        "declared_paths": paths_json,
        "macros": macros_json,
        "trace": trace_json,
    }
