"""Per-timestep link scores for every causal edge.

For an equation dependency x -> z the score at step t is

    |partial_change / dz| * sign(partial_change / dx)       (0 if dz or dx is 0)

where `partial_change` re-evaluates z's equation with x at its step-t value
and every other input (including simulation time and PREVIOUS memories) held
at step t-1. Flow-to-stock links are scored from the flow values that
produced the stock's change arriving at step t (the step t-1 evaluations):
`|flow / net| * +-1` with sign by inflow/outflow role, 0 when the net flow is
zero. Constraint links from a non-negative stock to its outflows score the
effective relation `outflow = share * (stock/dt + inflows)` while the
constraint binds and are 0 when it is slack. Conveyor-to-outflow links score
the perfect-mixing surrogate `outflow* = content / transit`, treating the
eventual response as if it were instantaneous.

A link through a macro is scored as the path score (product of constituent
link scores) of its hidden pathways; with several pathways the one with the
largest magnitude at each step wins, so the chosen structure may shift over
the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .engine import RunTrace, graph_tables
from .graph import CausalGraph, Edge, _full_edges
from .macros import ExpandedModel


class ScoreError(Exception):
    pass


def _sign(x: float) -> float:
    return float((x > 0.0) - (x < 0.0))


class _FrameEnv:
    """Equation re-evaluation with one pivot input moved to step t."""

    __slots__ = ("trace", "pivot", "t", "graphs", "offset")

    def __init__(self, trace, graphs, pivot, t, offset=-1):
        self.trace = trace
        self.graphs = graphs
        self.pivot = pivot
        self.t = t
        self.offset = offset

    @property
    def time(self):
        return float(self.trace.times[self.t + self.offset])

    def lookup(self, name):
        col = self.trace.values[name]
        if name == self.pivot:
            return float(col[self.t])
        return float(col[self.t + self.offset])

    def graph_points(self, name):
        return self.graphs[name]

    def previous(self, node):
        return float(self.trace.previous_values[id(node)][self.t + self.offset])


@dataclass
class ScoreSet:
    steps: int
    full: dict[Edge, np.ndarray]
    visible: dict[Edge, np.ndarray]
    relative: dict[Edge, np.ndarray]
    invalid: dict[Edge, int]
    chosen_pathway: dict[Edge, np.ndarray] = field(default_factory=dict)

    def series(self, edge: Edge) -> np.ndarray:
        return self.visible[edge]


def compute_scores(em: ExpandedModel, graph: CausalGraph, trace: RunTrace) -> ScoreSet:
    """Score every edge of the full and visible graphs at every step.

    Index 0 of every series is 0 (a score needs a previous step).
    """
    vm = em.var_map()
    graphs = graph_tables(em)
    n = trace.steps
    full_edges = _full_edges(em)
    invalid: dict[Edge, int] = {}

    conveyor_outflow = {}
    for v in em.variables:
        if v.kind == "conveyor":
            conveyor_outflow[(v.name, v.outflows[0])] = v

    transit_series: dict[str, np.ndarray] = {}
    for v in em.variables:
        if v.kind == "conveyor":
            transit_series[v.name] = _plain_series(em, trace, graphs, v.transit)

    full: dict[Edge, np.ndarray] = {}
    for edge in full_edges:
        bad = 0
        series = np.zeros(n + 1)
        if edge.kind == "equation" and (edge.source, edge.target) in conveyor_outflow:
            series = _conveyor_surrogate(trace, edge.source, transit_series[edge.source])
        elif edge.kind == "equation":
            series, bad = _equation_scores(em, trace, graphs, edge, vm)
        elif edge.kind == "flow":
            series = _flow_scores(trace, vm[edge.target], edge.source)
        elif edge.kind == "constraint":
            series, bad = _constraint_scores(em, trace, graphs, vm[edge.source], edge.target)
        full[edge] = series
        invalid[edge] = bad

    visible: dict[Edge, np.ndarray] = {}
    chosen: dict[Edge, np.ndarray] = {}
    for edge in graph.edges:
        if edge.kind == "crossing":
            mat = np.vstack([
                np.prod(np.vstack([full[e] for e in pw.edges]), axis=0)
                for pw in graph.pathways[edge]
            ])
            idx = np.argmax(np.abs(mat), axis=0)
            visible[edge] = mat[idx, np.arange(mat.shape[1])]
            chosen[edge] = idx
            constituents = {e for pw in graph.pathways[edge] for e in pw.edges}
            invalid[edge] = sum(invalid[e] for e in constituents)
        else:
            visible[edge] = full[edge]

    relative = _relative_scores(graph, visible)
    return ScoreSet(n, full, visible, relative, invalid, chosen)


def _plain_series(em, trace, graphs, expression) -> np.ndarray:
    out = np.zeros(trace.steps + 1)
    for t in range(trace.steps + 1):
        env = _FrameEnv(trace, graphs, pivot=None, t=t, offset=0)
        out[t] = ex.eval_expr(expression, env)
    return out


def _equation_scores(em, trace, graphs, edge: Edge, vm):
    zdef = vm[edge.target]
    zcol = trace.values[edge.target]
    xcol = trace.values[edge.source]
    out = np.zeros(trace.steps + 1)
    bad = 0
    for t in range(1, trace.steps + 1):
        dz = float(zcol[t] - zcol[t - 1])
        dx = float(xcol[t] - xcol[t - 1])
        if dz == 0.0 or dx == 0.0:
            continue
        env = _FrameEnv(trace, graphs, pivot=edge.source, t=t)
        try:
            moved = ex.eval_expr(zdef.equation, env)
        except ex.EvalError:
            bad += 1
            continue
        dxz = moved - float(zcol[t - 1])
        if not math.isfinite(dxz):
            bad += 1
            continue
        out[t] = abs(dxz / dz) * (_sign(dxz) * _sign(dx))
    return out, bad


def _flow_scores(trace: RunTrace, stock, flow: str) -> np.ndarray:
    """Flow-to-stock scores; the change arriving at step t was produced by the
    step t-1 flow values."""
    inflow = flow in stock.inflows
    out = np.zeros(trace.steps + 1)
    fcol = trace.values[flow]
    for t in range(1, trace.steps + 1):
        net = (math.fsum(float(trace.values[i][t - 1]) for i in stock.inflows)
               - math.fsum(float(trace.values[o][t - 1]) for o in stock.outflows))
        if net == 0.0:
            continue
        mag = abs(float(fcol[t - 1]) / net)
        out[t] = mag if inflow else -mag
    return out


def _conveyor_surrogate(trace: RunTrace, conveyor: str, transit: np.ndarray) -> np.ndarray:
    """Score content -> outflow through `outflow* = content / transit`."""
    ccol = trace.values[conveyor]
    out = np.zeros(trace.steps + 1)
    for t in range(1, trace.steps + 1):
        tt_prev, tt_now = float(transit[t - 1]), float(transit[t])
        if tt_prev == 0.0 or tt_now == 0.0:
            continue
        dz = float(ccol[t]) / tt_now - float(ccol[t - 1]) / tt_prev
        dx = float(ccol[t] - ccol[t - 1])
        if dz == 0.0 or dx == 0.0:
            continue
        dxz = dx / tt_prev
        out[t] = abs(dxz / dz) * (_sign(dxz) * _sign(dx))
    return out


def _constraint_scores(em, trace, graphs, stock, outflow: str):
    """Score stock -> outflow through the binding effective relation."""
    flags = trace.binding[stock.name]
    scol = trace.values[stock.name]
    ocol = trace.values[outflow]
    dt = trace.config.dt
    out = np.zeros(trace.steps + 1)
    bad = 0
    multi = len(stock.outflows) > 1
    vm = em.var_map()
    for t in range(1, trace.steps + 1):
        if not flags[t]:
            continue
        dz = float(ocol[t] - ocol[t - 1])
        dx = float(scol[t] - scol[t - 1])
        if dz == 0.0 or dx == 0.0:
            continue
        share = 1.0
        if multi:
            env = _FrameEnv(trace, graphs, pivot=None, t=t, offset=0)
            try:
                requested = [ex.eval_expr(vm[o].equation, env) for o in stock.outflows]
                mine = requested[stock.outflows.index(outflow)]
                total = math.fsum(requested)
                share = mine / total if total != 0.0 else 0.0
            except ex.EvalError:
                bad += 1
                continue
        inflows = math.fsum(float(trace.values[i][t - 1]) for i in stock.inflows)
        effective = share * (float(scol[t]) / dt + inflows)
        dxz = effective - float(ocol[t - 1])
        if not math.isfinite(dxz):
            bad += 1
            continue
        out[t] = abs(dxz / dz) * (_sign(dxz) * _sign(dx))
    return out, bad


def _relative_scores(graph: CausalGraph, visible) -> dict[Edge, np.ndarray]:
    """Normalize scores into each variable so incoming magnitudes sum to 1."""
    relative = {}
    by_target: dict[str, list[Edge]] = {}
    for e in graph.edges:
        by_target.setdefault(e.target, []).append(e)
    for target, edges in by_target.items():
        denom = np.sum(np.abs(np.vstack([visible[e] for e in edges])), axis=0)
        safe = np.where(denom == 0.0, 1.0, denom)
        for e in edges:
            relative[e] = np.where(denom == 0.0, 0.0, visible[e] / safe)
    return relative


def path_score_series(graph: CausalGraph, scores: ScoreSet, members) -> np.ndarray:
    """Product of link scores along a declared path of visible variables."""
    edges = []
    for a, b in zip(members, members[1:]):
        edges.append(resolve_edge(graph, a, b))
    if not edges:
        raise ScoreError("a path needs at least two variables")
    return np.prod(np.vstack([scores.visible[e] for e in edges]), axis=0)


def resolve_edge(graph: CausalGraph, a: str, b: str) -> Edge:
    found = graph.edges_between(a, b)
    if not found:
        raise ScoreError(f"no causal link {a} -> {b}")
    if len(found) > 1:
        kinds = ", ".join(e.kind for e in found)
        raise ScoreError(f"ambiguous link {a} -> {b} ({kinds}); declare via a unique route")
    return found[0]
