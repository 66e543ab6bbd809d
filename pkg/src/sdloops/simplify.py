"""Simplified causal loop diagrams from an analysis bundle.

Variable selection uses two thresholds:

* link inclusion: keep any variable with an inbound link whose relative link
  score magnitude varies (max - min over the run, in percent) by at least the
  threshold; values above 100 disable the rule since the range never exceeds
  100;
* loop inclusion: keep the stocks (and, iff `keep_flows`, the flows of every
  kept stock) of every loop whose mean |relative loop score| meets the
  threshold.

Loops that meet the loop threshold are then collapsed onto the retained
variables, preserving cyclic order. Identical collapsed cycles merge and
carry a composite relative score, the sum of their contributors' relative
score series; loops collapsing below two members are dropped from the diagram
and count toward unexplained behavior. Each simplified link is drawn from the
underlying full pathway with the largest time-averaged |path score|, and gets
a polarity confidence from the per-step strongest reinforcing and balancing
pathway scores; links at confidence 0.99 or below render gray (mixed).

Everything here is a pure function of the bundle, so re-simplification at new
thresholds never re-simulates.
"""

from __future__ import annotations

from dataclasses import dataclass

STOCKLIKE = ("stock", "conveyor")
GRAY_CUTOFF = 0.99


@dataclass(frozen=True)
class SimplificationParams:
    link_threshold: float = 0.0  # percent
    loop_threshold: float = 0.0  # percent
    keep_flows: bool = True


def _kind_map(bundle):
    return {v["name"]: v["kind"] for v in bundle["variables"]}


def _strong_loops(bundle, params):
    return [lp for lp in bundle["loops"]
            if lp["mean_abs_relative"] >= params.loop_threshold]


def select_variables(bundle: dict, params: SimplificationParams) -> set[str]:
    """Retained variable set for the given thresholds."""
    retained: set[str] = set()
    if params.link_threshold <= 100.0:
        for edge in bundle["edges"]:
            rel = edge["relative"][1:]
            if not rel:
                continue
            magnitudes = [abs(r) * 100.0 for r in rel]
            if max(magnitudes) - min(magnitudes) >= params.link_threshold:
                retained.add(edge["target"])
    kinds = _kind_map(bundle)
    for lp in _strong_loops(bundle, params):
        for m in lp["members"]:
            if kinds[m] in STOCKLIKE:
                retained.add(m)
    if params.keep_flows:
        for v in bundle["variables"]:
            if v["kind"] in STOCKLIKE and v["name"] in retained:
                retained.update(v["inflows"])
                retained.update(v["outflows"])
    return retained


def _canonical(members: list[str]) -> tuple[str, ...]:
    i = min(range(len(members)), key=lambda j: members[j])
    return tuple(members[i:]) + tuple(members[:i])


def _classify(series) -> tuple[str, float]:
    pos = sum(x for x in series if x > 0.0)
    neg = sum(x for x in series if x < 0.0)
    if pos == 0.0 and neg == 0.0:
        return "U", 1.0
    conf = link_confidence(pos, neg)
    if neg == 0.0:
        return "R", conf
    if pos == 0.0:
        return "B", conf
    if conf > GRAY_CUTOFF:
        return ("Ru" if pos > -neg else "Bu"), conf
    return "U", conf


def link_confidence(r: float, b: float) -> float:
    """|r - |b|| / (r + |b|); 1 when either side is absent."""
    if r == 0.0 and b == 0.0:
        return 1.0
    return abs(r - abs(b)) / (r + abs(b))


def _segment(loop, start: str, stop: str):
    """Members and edge kinds of the loop's arc from `start` to `stop`."""
    members = loop["members"]
    kinds = loop["edge_kinds"]
    n = len(members)
    i = members.index(start)
    nodes = [start]
    segment_kinds = []
    while True:
        segment_kinds.append(kinds[i])
        i = (i + 1) % n
        nodes.append(members[i])
        if members[i] == stop:
            return tuple(nodes), tuple(segment_kinds)


def _mean(xs) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def build_simplified_cld(bundle: dict, params: SimplificationParams) -> dict:
    """Collapse threshold-passing loops onto the retained variables."""
    retained = select_variables(bundle, params)
    steps = len(bundle["time"]) - 1
    edge_scores = {(e["source"], e["target"], e["kind"]): e["scores"]
                   for e in bundle["edges"]}

    groups: dict[tuple[str, ...], list[dict]] = {}
    dropped: list[str] = []
    for lp in _strong_loops(bundle, params):
        collapsed = [m for m in lp["members"] if m in retained]
        if len(collapsed) < 2:
            dropped.append(lp["id"])
            continue
        groups.setdefault(_canonical(collapsed), []).append(lp)

    loops_out = []
    link_candidates: dict[tuple[str, str], dict[tuple, list[float]]] = {}
    for cycle in sorted(groups):
        contributors = groups[cycle]
        composite = [0.0] * (steps + 1)
        for lp in contributors:
            for t, x in enumerate(lp["relative"]):
                composite[t] += x
        label_base, _conf = _classify(composite[1:])
        loops_out.append({
            "members": list(cycle),
            "label_base": label_base,
            "composite_mean": _mean([abs(x) for x in composite[1:]]),
            "contributing": sorted(lp["id"] for lp in contributors),
        })
        closed = list(cycle) + [cycle[0]]
        for u, v in zip(closed, closed[1:]):
            cands = link_candidates.setdefault((u, v), {})
            for lp in contributors:
                nodes, kinds = _segment(lp, u, v)
                key = (nodes, kinds)
                if key in cands:
                    continue
                series = [1.0] * (steps + 1)
                for (a, b), kind in zip(zip(nodes, nodes[1:]), kinds):
                    col = edge_scores[(a, b, kind)]
                    series = [s * c for s, c in zip(series, col)]
                cands[key] = series

    # label indices per polarity class, strongest first
    order = sorted(range(len(loops_out)),
                   key=lambda i: (-loops_out[i]["composite_mean"], loops_out[i]["members"]))
    counters: dict[str, int] = {}
    for i in order:
        base = loops_out[i]["label_base"]
        counters[base] = counters.get(base, 0) + 1
        loops_out[i]["label"] = f"{base}{counters[base]}"
    for lp in loops_out:
        del lp["label_base"]
    loops_out.sort(key=lambda lp: (-lp["composite_mean"], lp["members"]))

    links_out = []
    for (u, v) in sorted(link_candidates):
        cands = link_candidates[(u, v)]
        best_key, best_mean = None, -1.0
        r_sum, b_sum = 0.0, 0.0
        for t in range(1, steps + 1):
            step_pos = 0.0
            step_neg = 0.0
            for series in cands.values():
                x = series[t]
                if x > step_pos:
                    step_pos = x
                if x < step_neg:
                    step_neg = x
            r_sum += step_pos
            b_sum += step_neg
        for key in sorted(cands):
            mean = _mean([abs(x) for x in cands[key][1:]])
            if mean > best_mean:
                best_key, best_mean = key, mean
        conf = link_confidence(r_sum, b_sum)
        if conf > GRAY_CUTOFF:
            polarity = "+" if r_sum >= -b_sum else "-"
        else:
            polarity = "mixed"
        links_out.append({
            "source": u,
            "target": v,
            "pathway": list(best_key[0]),
            "pathway_kinds": list(best_key[1]),
            "strength": best_mean,
            "confidence": conf,
            "polarity": polarity,
        })

    explained = sum(lp["composite_mean"] for lp in loops_out)
    return {
        "params": {
            "link_threshold": params.link_threshold,
            "loop_threshold": params.loop_threshold,
            "keep_flows": params.keep_flows,
        },
        "retained": sorted(retained),
        "links": links_out,
        "loops": loops_out,
        "dropped_loops": sorted(dropped),
        "explained_pct": explained,
    }


def explained_behavior(cld: dict) -> float:
    """Portion of full model behavior carried by the displayed simplified loops."""
    return cld["explained_pct"]


_COLORS = {"+": "blue", "-": "red", "mixed": "gray"}


def to_dot(cld: dict) -> str:
    """DOT rendering: a node per retained variable, an edge per simplified link
    with penwidth from mean |path score| (clamped to [0.5, 6]) and color by
    polarity; the loop legend rides along as a comment block."""
    lines = ["digraph simplified_cld {"]
    lines.append(f"  // explained behavior: {cld['explained_pct']:.1f}%")
    for lp in cld["loops"]:
        members = " -> ".join(lp["members"] + [lp["members"][0]])
        lines.append(f"  // {lp['label']}: {lp['composite_mean']:.2f}%"
                     f" loops={','.join(lp['contributing'])} {members}")
    lines.append("  node [shape=box];")
    for name in cld["retained"]:
        lines.append(f'  "{name}";')
    for link in cld["links"]:
        width = min(6.0, max(0.5, link["strength"]))
        color = _COLORS[link["polarity"]]
        lines.append(f'  "{link["source"]}" -> "{link["target"]}"'
                     f' [color={color}, penwidth={width:.3f}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def summary_table(cld: dict) -> str:
    """Text table: one row per simplified loop plus the explained-behavior total."""
    header = f"{'loop':<6} {'contribution':>13} {'loops_aggregated':>17}  links_included"
    rows = [header, "-" * len(header)]
    for lp in cld["loops"]:
        members = " -> ".join(lp["members"] + [lp["members"][0]])
        rows.append(f"{lp['label']:<6} {lp['composite_mean']:>12.2f}% "
                    f"{len(lp['contributing']):>17}  {members}")
    rows.append(f"explained behavior: {cld['explained_pct']:.1f}%")
    return "\n".join(rows) + "\n"
