"""Causal graph construction over the expanded model.

Two layers:

* the *full* graph covers every variable including hidden macro internals,
  with edge kinds `equation`, `flow` (flow-to-stock), and `constraint`
  (non-negative stock -> each of its outflows);
* the *visible* graph covers user variables only. Where a causal route passes
  through hidden macro variables it is represented by a single `crossing`
  edge carrying the set of hidden pathways (edge-simple trails), so loops
  reported downstream are automatically trimmed of macro internals and loops
  living entirely inside a macro are dropped.

Constraint edges are created statically for every non-negative stock; whether
they carry any score is decided per step by the scoring layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as ex
from .macros import ExpandedModel

EDGE_KINDS = ("equation", "flow", "constraint", "crossing")
KIND_ORDER = {k: i for i, k in enumerate(EDGE_KINDS)}


class GraphError(Exception):
    pass


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    kind: str


@dataclass(frozen=True)
class Pathway:
    """One causal route between two visible variables through hidden nodes."""

    nodes: tuple[str, ...]  # visible source, hidden interior..., visible target
    edges: tuple[Edge, ...]


@dataclass
class CausalGraph:
    edges: list[Edge]
    # (source, target, "crossing") -> pathway list, deterministic order
    pathways: dict[Edge, list[Pathway]] = field(default_factory=dict)
    partition_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.out: dict[str, list[Edge]] = {}
        self.into: dict[str, list[Edge]] = {}
        for e in self.edges:
            self.out.setdefault(e.source, []).append(e)
            self.into.setdefault(e.target, []).append(e)

    def nodes(self) -> set[str]:
        return {e.source for e in self.edges} | {e.target for e in self.edges}

    def edges_between(self, source: str, target: str) -> list[Edge]:
        return [e for e in self.out.get(source, []) if e.target == target]


def _full_edges(em: ExpandedModel) -> list[Edge]:
    edges = []
    for v in em.variables:
        if not v.is_stocklike() and v.equation is not None:
            for r in sorted(ex.causal_refs(v.equation)):
                edges.append(Edge(r, v.name, "equation"))
        if v.is_stocklike():
            for f in v.inflows + v.outflows:
                edges.append(Edge(f, v.name, "flow"))
        if v.nonneg:
            for o in v.outflows:
                edges.append(Edge(v.name, o, "constraint"))
    return edges


def _check_simultaneity(em: ExpandedModel, edges: list[Edge]):
    """Reject algebraic cycles among non-stock variables, naming the cycle."""
    vm = em.var_map()
    adj: dict[str, list[str]] = {}
    for e in edges:
        if e.kind != "equation":
            continue
        if vm[e.source].is_stocklike() or vm[e.target].is_stocklike():
            continue
        adj.setdefault(e.source, []).append(e.target)

    WHITE, GRAY, BLACK = 0, 1, 2
    color = {}
    for start in sorted(adj):
        if color.get(start, WHITE) != WHITE:
            continue
        stack = [(start, iter(sorted(adj.get(start, []))))]
        path = [start]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color.get(nxt, WHITE) == GRAY:
                    cycle = path[path.index(nxt):] + [nxt]
                    raise GraphError(
                        "algebraic cycle among non-stock variables: "
                        + " -> ".join(cycle))
                if color.get(nxt, WHITE) == WHITE:
                    color[nxt] = GRAY
                    path.append(nxt)
                    stack.append((nxt, iter(sorted(adj.get(nxt, [])))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                path.pop()
                color[node] = BLACK


def _hidden_trails(full: list[Edge], hidden: set[str], source: str):
    """Edge-simple trails from a visible source through hidden nodes to any
    visible target. Yields (target, node path, edge path)."""
    out: dict[str, list[Edge]] = {}
    for e in full:
        out.setdefault(e.source, []).append(e)
    for lst in out.values():
        lst.sort(key=lambda e: (e.target, KIND_ORDER[e.kind]))

    results = []
    first_hops = [e for e in out.get(source, []) if e.target in hidden]

    def extend(node, nodes, edges, used):
        for e in out.get(node, []):
            if e in used:
                continue
            if e.target in hidden:
                extend(e.target, nodes + [e.target], edges + [e], used | {e})
            else:
                results.append((e.target, tuple(nodes + [e.target]), tuple(edges + [e])))

    for e in first_hops:
        extend(e.target, [source, e.target], [e], {e})
    return results


def build_causal_graph(em: ExpandedModel) -> CausalGraph:
    """Build the visible causal graph, rejecting simultaneous equations.

    The edge set is a pure function of model structure: parameter values never
    add or remove edges.
    """
    full = _full_edges(em)
    _check_simultaneity(em, full)
    hidden = em.hidden()

    visible_edges: list[Edge] = []
    pathways: dict[Edge, list[Pathway]] = {}
    seen = set()
    for e in full:
        if e.source in hidden or e.target in hidden:
            continue
        if e in seen:
            continue
        seen.add(e)
        visible_edges.append(e)

    crossing: dict[tuple[str, str], list[Pathway]] = {}
    visible_nodes = {v.name for v in em.variables if not v.name.startswith("~")}
    for src in sorted(visible_nodes):
        for target, nodes, trail_edges in _hidden_trails(full, hidden, src):
            crossing.setdefault((src, target), []).append(Pathway(nodes, trail_edges))
    for (src, target), pws in sorted(crossing.items()):
        edge = Edge(src, target, "crossing")
        visible_edges.append(edge)
        pathways[edge] = sorted(pws, key=lambda p: (len(p.nodes), p.nodes))

    graph = CausalGraph(visible_edges, pathways)
    graph.partition_of = _assign_partitions(graph)
    _annotate_instances(em, full)
    return graph


def _annotate_instances(em: ExpandedModel, full: list[Edge]):
    """Record per-instance argument pathways and internal-only loops."""
    for inst in em.instances:
        members = set(inst.members)
        sub = [e for e in full if e.source in members and e.target in members]
        direct = {e.source for e in sub if e.target == inst.output}
        for arg, entry_nodes in inst.entries.items():
            pws: list[tuple[str, ...]] = []
            for entry in entry_nodes:
                if entry == inst.output:
                    pws.append((entry,))
                if entry in direct:
                    pws.append((entry, inst.output))
                for target, nodes, _ in _hidden_trails(sub, members - {inst.output}, entry):
                    if target == inst.output:
                        pws.append(nodes)
            inst.pathways[arg] = sorted(set(pws), key=lambda p: (len(p), p))
        inst.internal_loops = _internal_cycles(sub, sorted(members))


def _internal_cycles(edges: list[Edge], nodes: list[str]) -> list[tuple[str, ...]]:
    """Elementary cycles inside one macro instance (tiny graphs; plain DFS)."""
    adj: dict[str, set[str]] = {}
    for e in edges:
        adj.setdefault(e.source, set()).add(e.target)
    order = {n: i for i, n in enumerate(nodes)}
    cycles = []

    def search(anchor, node, path, on_path):
        for nxt in sorted(adj.get(node, ())):
            if order.get(nxt, -1) < order[anchor]:
                continue
            if nxt == anchor:
                cycles.append(tuple(path))
            elif nxt not in on_path:
                search(anchor, nxt, path + [nxt], on_path | {nxt})

    for anchor in nodes:
        search(anchor, anchor, [anchor], {anchor})
    return cycles


def _assign_partitions(graph: CausalGraph) -> dict[str, int]:
    """Partition id per variable: SCCs that contain at least one cycle."""
    sccs = strongly_connected_components(graph)
    cyclic = []
    for comp in sccs:
        if len(comp) > 1:
            cyclic.append(comp)
        else:
            (n,) = comp
            if any(e.target == n for e in graph.out.get(n, [])):
                cyclic.append(comp)
    cyclic.sort(key=lambda comp: min(comp))
    return {n: i for i, comp in enumerate(cyclic) for n in comp}


def strongly_connected_components(graph: CausalGraph) -> list[set[str]]:
    """Iterative Tarjan over the visible graph."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    sccs: list[set[str]] = []
    nodes = sorted(graph.nodes())
    succ = {n: sorted({e.target for e in graph.out.get(n, [])}) for n in nodes}

    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, pi = work.pop()
            if pi == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            children = succ[node]
            for i in range(pi, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    recurse = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if recurse:
                continue
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


@dataclass(frozen=True)
class CyclePartition:
    id: int
    members: tuple[str, ...]


def find_partitions(graph: CausalGraph) -> list[CyclePartition]:
    """Maximal variable sets sharing feedback loops; acyclic variables belong to none."""
    by_id: dict[int, list[str]] = {}
    for node, pid in graph.partition_of.items():
        by_id.setdefault(pid, []).append(node)
    return [CyclePartition(pid, tuple(sorted(members)))
            for pid, members in sorted(by_id.items())]
