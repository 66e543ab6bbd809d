"""Feedback loop identification, scoring, and polarity classification.

Loops are elementary cycles of the visible causal graph, found per cycle
partition either exhaustively (Johnson-style enumeration, bounded by a cap)
or, when there are too many, by strongest-path discovery: from every
partition variable at every step, greedily follow the outgoing edge with the
largest score magnitude until a node repeats.

A loop's score at a step is the product of its edge scores; relative loop
scores are normalized per partition so magnitudes sum to 100 at steps where
any loop is active. Polarity labels are R/B for consistently signed loops and
Ru/Bu/U for mixed ones, split by the confidence value

    |r - |b|| / (r + |b|)

with r and b the time-sums of positive and negative loop scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from .graph import KIND_ORDER, CausalGraph, Edge
from .scores import ScoreSet, resolve_edge

DEFAULT_LOOP_CAP = 10_000


class TooManyLoops(Exception):
    pass


class LoopError(Exception):
    pass


def canonical_rotation(members: tuple[str, ...]) -> int:
    return min(range(len(members)), key=lambda i: members[i])


def canonicalize(members, edges):
    i = canonical_rotation(tuple(members))
    return tuple(members[i:]) + tuple(members[:i]), tuple(edges[i:]) + tuple(edges[:i])


@dataclass
class LoopRecord:
    members: tuple[str, ...]  # canonical rotation, first member lexicographically smallest
    edges: tuple[Edge, ...]  # edges[i] connects members[i] -> members[(i+1) % n]
    partition: int
    provenance: str  # enumerated | strongest-path | user-declared
    declared_as: str | None = None
    scores: np.ndarray | None = None
    relative: np.ndarray | None = None
    label: str = ""
    mean_abs_relative: float = 0.0
    active: bool = False

    def key(self):
        return (self.members, tuple(e.kind for e in self.edges))


def _node_cycles(nodes: list[str], adj: dict[str, list[str]], cap: int):
    """All elementary cycles, Johnson-style (blocked sets per start node)."""
    index = {n: i for i, n in enumerate(nodes)}
    cycles: list[tuple[str, ...]] = []

    def circuits(s, sub_adj):
        blocked = dict.fromkeys(sub_adj, False)
        blocks: dict[str, set[str]] = {v: set() for v in sub_adj}
        stack: list[str] = []

        def unblock(u):
            blocked[u] = False
            while blocks[u]:
                w = blocks[u].pop()
                if blocked[w]:
                    unblock(w)

        def circuit(v) -> bool:
            found = False
            stack.append(v)
            blocked[v] = True
            for w in sub_adj[v]:
                if w == s:
                    cycles.append(tuple(stack))
                    if len(cycles) > cap:
                        raise TooManyLoops(f"more than {cap} loops")
                    found = True
                elif not blocked[w] and circuit(w):
                    found = True
            if found:
                unblock(v)
            else:
                for w in sub_adj[v]:
                    blocks[w].add(v)
            stack.pop()
            return found

        circuit(s)

    for i, s in enumerate(nodes):
        sub = {n: sorted(w for w in adj.get(n, ()) if index[w] >= i)
               for n in nodes if index[n] >= i}
        if sub.get(s):
            circuits(s, sub)
    return cycles


def enumerate_loops(graph: CausalGraph, members, cap: int = DEFAULT_LOOP_CAP):
    """Every elementary cycle within one partition, as (members, edges) pairs.

    Parallel edges of different kinds yield one loop per kind combination.
    Raises TooManyLoops beyond the cap; the caller falls back to
    strongest-path discovery.
    """
    memberset = set(members)
    adj = {m: sorted({e.target for e in graph.out.get(m, ()) if e.target in memberset})
           for m in members}
    loops = []
    for cyc in _node_cycles(sorted(members), adj, cap):
        pairs = [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]
        for combo in iproduct(*(graph.edges_between(a, b) for a, b in pairs)):
            loops.append(canonicalize(cyc, combo))
            if len(loops) > cap:
                raise TooManyLoops(f"more than {cap} loops")
    return loops


def strongest_path_loops(graph: CausalGraph, scores: ScoreSet, members):
    """Loops discovered by greedy max-|score| walks from every member at every step.

    Ties break on lexicographic target name, then edge kind. The walk stays
    inside the partition and terminates within |partition| hops.
    """
    memberset = set(members)
    out_edges = {m: [e for e in graph.out.get(m, ()) if e.target in memberset]
                 for m in members}
    found: dict[tuple, tuple] = {}
    for t in range(1, scores.steps + 1):
        for start in sorted(members):
            node = start
            walk = [start]
            walk_edges: list[Edge] = []
            seen = {start: 0}
            for _ in range(len(memberset) + 1):
                cands = out_edges[node]
                if not cands:
                    break
                edge = min(cands, key=lambda e: (-abs(float(scores.visible[e][t])),
                                                 e.target, KIND_ORDER[e.kind]))
                if edge.target in seen:
                    i = seen[edge.target]
                    cyc, combo = canonicalize(walk[i:], walk_edges[i:] + [edge])
                    found.setdefault((cyc, tuple(e.kind for e in combo)), (cyc, combo))
                    break
                seen[edge.target] = len(walk)
                walk.append(edge.target)
                walk_edges.append(edge)
                node = edge.target
    return [found[k] for k in sorted(found)]


def loop_score_series(edges, scores: ScoreSet) -> np.ndarray:
    """Product of the loop's edge scores at every step (composite scores for
    macro-crossing edges)."""
    return np.prod(np.vstack([scores.visible[e] for e in edges]), axis=0)


def confidence(r: float, b: float) -> float:
    """Polarity consistency: 1 when either side is absent, 0 when they balance."""
    if r == 0.0 and b == 0.0:
        return 1.0
    return abs(r - abs(b)) / (r + abs(b))


def classify_polarity(series: np.ndarray) -> tuple[str, bool]:
    """Base polarity label and whether the loop was active at all."""
    pos = float(series[series > 0.0].sum())
    neg = float(series[series < 0.0].sum())
    if pos == 0.0 and neg == 0.0:
        return "U", False
    if neg == 0.0:
        return "R", True
    if pos == 0.0:
        return "B", True
    conf = confidence(pos, neg)
    if conf > 0.99:
        return ("Ru" if pos > -neg else "Bu"), True
    return "U", True


def build_loop_records(graph: CausalGraph, scores: ScoreSet,
                       declared: list[tuple[str, tuple[str, ...]]] | None = None,
                       cap: int = DEFAULT_LOOP_CAP):
    """Full loop inventory: per-partition enumeration (or strongest-path
    fallback), user-declared loops merged in, scores, relative scores, labels.

    Returns (records, partition_modes) where partition_modes maps partition id
    to "enumerated" or "strongest-path".
    """
    partitions: dict[int, list[str]] = {}
    for node, pid in graph.partition_of.items():
        partitions.setdefault(pid, []).append(node)

    records: list[LoopRecord] = []
    modes: dict[int, str] = {}
    for pid in sorted(partitions):
        members = sorted(partitions[pid])
        try:
            loops = enumerate_loops(graph, members, cap)
            modes[pid] = "enumerated"
        except TooManyLoops:
            loops = strongest_path_loops(graph, scores, members)
            modes[pid] = "strongest-path"
        for cyc, combo in loops:
            records.append(LoopRecord(cyc, combo, pid, modes[pid]))

    by_key = {r.key(): r for r in records}
    for name, members in declared or ():
        cyc, combo = _resolve_declared(graph, name, members)
        pid = graph.partition_of[cyc[0]]
        rec = by_key.get((cyc, tuple(e.kind for e in combo)))
        if rec is None:
            rec = LoopRecord(cyc, combo, pid, "user-declared", declared_as=name)
            records.append(rec)
            by_key[rec.key()] = rec
        else:
            rec.provenance = "user-declared"
            rec.declared_as = name

    for rec in records:
        rec.scores = loop_score_series(rec.edges, scores)

    for pid in sorted(partitions):
        group = [r for r in records if r.partition == pid]
        if not group:
            continue
        mat = np.vstack([r.scores for r in group])
        denom = np.sum(np.abs(mat), axis=0)
        safe = np.where(denom == 0.0, 1.0, denom)
        for r in group:
            r.relative = np.where(denom == 0.0, 0.0, 100.0 * r.scores / safe)
            r.mean_abs_relative = float(np.mean(np.abs(r.relative[1:]))) if scores.steps else 0.0

    _assign_labels(records)
    records.sort(key=lambda r: (r.partition, -r.mean_abs_relative, r.members))
    return records, modes


def _resolve_declared(graph: CausalGraph, name: str, members):
    if len(set(members)) != len(members):
        raise LoopError(f"loopscore {name}: repeated variable in cycle")
    for m in members:
        if m not in graph.partition_of:
            raise LoopError(f"loopscore {name}: {m} is not part of any feedback loop")
    pids = {graph.partition_of[m] for m in members}
    if len(pids) != 1:
        raise LoopError(f"loopscore {name}: members span several cycle partitions")
    edges = []
    closed = list(members) + [members[0]]
    for a, b in zip(closed, closed[1:]):
        try:
            edges.append(resolve_edge(graph, a, b))
        except Exception as exc:
            raise LoopError(f"loopscore {name}: {exc}") from None
    return canonicalize(tuple(members), tuple(edges))


def _assign_labels(records: list[LoopRecord]):
    by_base: dict[str, list[LoopRecord]] = {}
    for rec in records:
        base, active = classify_polarity(rec.scores)
        rec.active = active
        by_base.setdefault(base, []).append(rec)
    for base, group in by_base.items():
        group.sort(key=lambda r: (-r.mean_abs_relative, r.members))
        for i, rec in enumerate(group, start=1):
            rec.label = f"{base}{i}"
