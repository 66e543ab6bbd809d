import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdloops.engine import simulate
from sdloops.graph import CausalGraph, Edge, build_causal_graph
from sdloops.loops import (LoopError, TooManyLoops, build_loop_records, canonicalize,
                           classify_polarity, confidence, enumerate_loops,
                           strongest_path_loops)
from sdloops.macros import expand_macros
from sdloops.model import set_constant
from sdloops.parser import parse_model
from sdloops.scores import compute_scores

from conftest import analyzed, fixture_text


def _analysis(src, declared=None, cap=10_000, **overrides):
    ir = parse_model(src)
    for k, v in overrides.items():
        ir = set_constant(ir, k, v)
    em = expand_macros(ir)
    graph = build_causal_graph(em)
    trace = simulate(em)
    scores = compute_scores(em, graph, trace)
    records, modes = build_loop_records(graph, scores, declared or [], cap=cap)
    return graph, scores, records, modes


def _graph_from_edges(pairs) -> CausalGraph:
    graph = CausalGraph([Edge(a, b, "equation") for a, b in pairs])
    from sdloops.graph import _assign_partitions
    graph.partition_of = _assign_partitions(graph)
    return graph


def brute_force_cycles(nodes, pairs):
    """Independent oracle: DFS from each anchor using only nodes >= anchor."""
    adj = {}
    for a, b in pairs:
        adj.setdefault(a, set()).add(b)
    order = {n: i for i, n in enumerate(sorted(nodes))}
    cycles = set()

    def walk(anchor, node, path, on_path):
        for nxt in adj.get(node, ()):
            if order[nxt] < order[anchor]:
                continue
            if nxt == anchor:
                cycles.add(tuple(path))
            elif nxt not in on_path:
                walk(anchor, nxt, path + [nxt], on_path | {nxt})

    for anchor in sorted(nodes):
        walk(anchor, anchor, [anchor], {anchor})
    return cycles


def test_figure5_two_loops():
    _, _, records, modes = _analysis(fixture_text("figure5.sdm"))
    assert modes == {0: "enumerated"}
    members = sorted(r.members for r in records)
    assert members == [("Population", "births"), ("Population", "deaths")]


def test_figure7_three_loops(figure7):
    loops = figure7["loops"]
    assert len(loops) == 3
    labels = {lp["label"] for lp in loops}
    assert labels == {"R1", "B1", "B2"}
    capacity_loop = next(lp for lp in loops if "crowding" in lp["members"])
    assert capacity_loop["label"] == "B1"


def test_complete_digraph_overflows_cap():
    nodes = [f"n{i}" for i in range(6)]
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    graph = _graph_from_edges(pairs)
    with pytest.raises(TooManyLoops):
        enumerate_loops(graph, nodes, cap=100)
    # and the oracle agrees there are more than 100
    assert len(brute_force_cycles(nodes, pairs)) > 100


def _random_digraph(rng, n_nodes, density=0.3):
    nodes = [f"v{i}" for i in range(n_nodes)]
    pairs = [(a, b) for a in nodes for b in nodes
             if a != b and rng.random() < density]
    pairs += [(n, n) for n in nodes if rng.random() < 0.08]
    return nodes, pairs


def test_enumeration_matches_brute_force_oracle():
    rng = random.Random(20260810)
    for _ in range(60):
        nodes, pairs = _random_digraph(rng, rng.randint(2, 8), rng.uniform(0.1, 0.5))
        graph = _graph_from_edges(pairs)
        found = set()
        for part in set(graph.partition_of.values()):
            members = [n for n, p in graph.partition_of.items() if p == part]
            for cyc, _ in enumerate_loops(graph, members, cap=100_000):
                found.add(cyc)
        expected = {canonicalize(c, c)[0] for c in brute_force_cycles(nodes, pairs)}
        assert found == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.random_module())
def test_enumeration_oracle_property(n, rnd):
    rng = random.Random(rnd.seed)
    nodes, pairs = _random_digraph(rng, n, 0.4)
    graph = _graph_from_edges(pairs)
    found = set()
    for part in set(graph.partition_of.values()):
        members = [m for m, p in graph.partition_of.items() if p == part]
        for cyc, _ in enumerate_loops(graph, members, cap=100_000):
            found.add(cyc)
    assert found == {canonicalize(c, c)[0] for c in brute_force_cycles(nodes, pairs)}


def test_strongest_path_single_dominant_loop():
    graph, scores, records, _ = _analysis(fixture_text("figure5.sdm"))
    members = ["Population", "births", "deaths"]
    discovered = strongest_path_loops(graph, scores, members)
    cycles = {cyc for cyc, _ in discovered}
    # births wins the greedy tie-break from Population, so only the growth
    # loop is discovered
    assert cycles == {("Population", "births")}


def test_strongest_path_subset_of_enumeration():
    graph, scores, records, _ = _analysis(fixture_text("figure7.sdm"))
    members = sorted(m for m, p in graph.partition_of.items() if p == 0)
    discovered = {cyc for cyc, _ in strongest_path_loops(graph, scores, members)}
    enumerated = {cyc for cyc, _ in enumerate_loops(graph, members)}
    assert discovered <= enumerated
    assert discovered


def test_strongest_path_discovers_shifting_dominance():
    # the fast drain saturates while the stock is high (its link score drops
    # to zero there), so different loops win the greedy walk early and late
    src = ("sim start=0 stop=40 dt=0.5\n"
           "stock S = 400 [+fill, -fast, -slow]\n"
           "flow fill = 10\n"
           "flow fast = MIN(S * 0.2, 30)\n"
           "flow slow = S * 0.02\n")
    graph, scores, records, _ = _analysis(src)
    members = sorted(m for m, p in graph.partition_of.items() if p == 0)
    discovered = {cyc for cyc, _ in strongest_path_loops(graph, scores, members)}
    assert ("S", "fast") in discovered
    assert ("S", "slow") in discovered


def test_strongest_path_tie_breaks_lexicographically():
    pairs = [("s", "a"), ("s", "b"), ("a", "s"), ("b", "s")]
    graph = _graph_from_edges(pairs)

    class _FakeScores:
        steps = 1
        visible = {e: np.array([0.0, 1.0]) for e in graph.edges}

    discovered = strongest_path_loops(graph, _FakeScores(), ["a", "b", "s"])
    # from s both edges tie at |1.0| and 'a' wins alphabetically, so every
    # walk funnels into the (a, s) loop and (b, s) is never discovered
    assert {cyc for cyc, _ in discovered} == {("a", "s")}


def test_loop_scores_figure5_are_exact_and_constant():
    _, _, records, _ = _analysis(fixture_text("figure5.sdm"))
    by_members = {r.members: r for r in records}
    growth = by_members[("Population", "births")]
    drain = by_members[("Population", "deaths")]
    assert growth.scores[1:] == pytest.approx(np.full(200, 2.0), abs=1e-12)
    assert drain.scores[1:] == pytest.approx(np.full(200, -1.0), abs=1e-12)
    assert growth.scores[1:].max() - growth.scores[1:].min() < 1e-9
    assert growth.label == "R1" and drain.label == "B1"


def test_loop_score_is_exact_product_of_edge_scores(figure7):
    for lp in figure7["loops"]:
        edges = {(e["source"], e["target"], e["kind"]): e["scores"] for e in figure7["edges"]}
        closed = lp["members"] + [lp["members"][0]]
        for t in (1, 50, 400, 800):
            expected = 1.0
            for (a, b), kind in zip(zip(closed, closed[1:]), lp["edge_kinds"]):
                expected *= edges[(a, b, kind)][t]
            assert lp["scores"][t] == expected


def test_relative_loop_scores_figure5():
    b = analyzed("figure5.sdm")
    rel = {lp["label"]: lp["relative"][10] for lp in b["loops"]}
    assert rel["R1"] == pytest.approx(200 / 3, abs=1e-9)
    assert rel["B1"] == pytest.approx(-100 / 3, abs=1e-9)


def test_single_loop_partition_is_plus_minus_100():
    b = analyzed("figure4.sdm")
    (lp,) = b["loops"]
    assert set(lp["relative"][1:]) == {100.0}


def test_equilibrium_reports_no_loops():
    b = analyzed("figure5.sdm", overrides=(("lifetime", 10.0),))
    assert all(not lp["active"] for lp in b["loops"])
    assert not b["partitions"][0]["any_active"]
    assert all(set(lp["relative"]) == {0.0} for lp in b["loops"])


def test_normalization_sums_to_100_on_active_steps(figure7):
    by_partition = {}
    for lp in figure7["loops"]:
        by_partition.setdefault(lp["partition"], []).append(lp)
    for loops in by_partition.values():
        steps = len(figure7["time"])
        for t in range(1, steps):
            total = sum(abs(lp["relative"][t]) for lp in loops)
            if any(lp["scores"][t] != 0.0 for lp in loops):
                assert total == pytest.approx(100.0, abs=1e-9)


def test_polarity_sign_homomorphism(figure7):
    edges = {(e["source"], e["target"], e["kind"]): e["scores"] for e in figure7["edges"]}
    for lp in figure7["loops"]:
        closed = lp["members"] + [lp["members"][0]]
        for t in range(1, len(figure7["time"]), 37):
            signs = 1.0
            for (a, b), kind in zip(zip(closed, closed[1:]), lp["edge_kinds"]):
                signs *= np.sign(edges[(a, b, kind)][t])
            assert np.sign(lp["scores"][t]) == signs


def test_classify_polarity_cases():
    assert classify_polarity(np.array([0.0, 1.0, 2.0])) == ("R", True)
    assert classify_polarity(np.array([0.0, -1.0, -2.0])) == ("B", True)
    assert classify_polarity(np.array([0.0, 0.0])) == ("U", False)
    # r=995, b=-5 sits exactly on the 0.99 cutoff, which is not enough
    series = np.array([995.0, -5.0])
    assert confidence(995, -5) == 0.99
    assert classify_polarity(series) == ("U", True)
    # clearly dominant mixed polarity earns Ru
    assert classify_polarity(np.array([999.0, -1.0])) == ("Ru", True)
    assert classify_polarity(np.array([1.0, -999.0])) == ("Bu", True)


def test_confidence_properties():
    assert confidence(5.0, 0.0) == 1.0
    assert confidence(0.0, -3.0) == 1.0
    assert confidence(7.0, -7.0) == 0.0
    assert confidence(0.0, 0.0) == 1.0


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
def test_confidence_symmetry(r, babs):
    assert confidence(r, -babs) == pytest.approx(confidence(babs, -r), rel=1e-12)


def test_declared_loop_deduplicates_with_enumerated():
    src = fixture_text("figure5.sdm") + "loopscore growth = Population -> births\n"
    ir = parse_model(src)
    em = expand_macros(ir)
    graph = build_causal_graph(em)
    scores = compute_scores(em, graph, simulate(em))
    records, _ = build_loop_records(graph, scores, ir.declared_loops)
    assert len(records) == 2
    growth = next(r for r in records if r.members == ("Population", "births"))
    assert growth.provenance == "user-declared"
    assert growth.declared_as == "growth"


def test_declared_loop_appears_when_discovery_misses_it():
    graph, scores, records, modes = _analysis(
        fixture_text("figure5.sdm"),
        declared=[("drain", ("Population", "deaths"))], cap=1)
    assert modes == {0: "strongest-path"}
    members = sorted(r.members for r in records)
    assert ("Population", "deaths") in members
    drain = next(r for r in records if r.members == ("Population", "deaths"))
    assert drain.provenance == "user-declared"
    # relative scores renormalize over the known loops
    mat = np.vstack([np.abs(r.relative) for r in records])
    sums = mat.sum(axis=0)
    assert np.all((np.abs(sums - 100.0) < 1e-9) | (sums == 0.0))


def test_declared_non_cycle_is_an_error():
    src = fixture_text("figure5.sdm")
    with pytest.raises(LoopError, match="no causal link"):
        _analysis(src, declared=[("bad", ("births", "deaths"))])


def test_inactive_loops_are_labeled_u_and_flagged():
    b = analyzed("workforce.sdm")
    inactive = [lp for lp in b["loops"] if not lp["active"]]
    assert len(inactive) == 2
    assert all(lp["label"].startswith("U") for lp in inactive)


def test_two_partitions_normalize_independently():
    cut = fixture_text("figure2.sdm").replace(
        " + coupling * wb", "").replace(" + coupling * wa", "")
    _, _, records, _ = _analysis(cut)
    partitions = {r.partition for r in records}
    assert len(partitions) == 2
    for pid in partitions:
        group = [r for r in records if r.partition == pid]
        mat = np.vstack([np.abs(r.relative) for r in group])
        sums = mat.sum(axis=0)
        active = np.vstack([r.scores for r in group]).any(axis=0)
        assert np.allclose(sums[active], 100.0, atol=1e-9)
        assert np.all(sums[~active] == 0.0)


def test_loop_indices_order_by_mean_relative_score(figure7):
    balancing = sorted((lp for lp in figure7["loops"] if lp["label"].startswith("B")),
                       key=lambda lp: lp["label"])
    means = [lp["mean_abs_relative"] for lp in balancing]
    assert means == sorted(means, reverse=True)
