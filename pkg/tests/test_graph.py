import pytest

from sdloops.graph import Edge, GraphError, build_causal_graph, find_partitions
from sdloops.macros import expand_macros
from sdloops.parser import parse_model

from conftest import fixture_text


def _graph(src):
    return build_causal_graph(expand_macros(parse_model(src)))


def test_figure4_edges():
    g = _graph(fixture_text("figure4.sdm"))
    assert Edge("Population", "births", "equation") in g.edges
    assert Edge("births", "Population", "flow") in g.edges
    assert Edge("birth_rate", "births", "equation") in g.edges
    assert len(g.edges) == 3


def test_workforce_has_static_constraint_edge():
    g = _graph(fixture_text("workforce.sdm"))
    assert Edge("Workers", "leaving", "constraint") in g.edges
    assert Edge("Apprentices", "finishing_training", "equation") in g.edges
    assert Edge("finishing_training", "Apprentices", "flow") in g.edges


def test_edges_do_not_depend_on_parameter_values():
    base = parse_model(fixture_text("workforce.sdm"))
    from sdloops.model import set_constant
    g1 = build_causal_graph(expand_macros(base))
    g2 = build_causal_graph(expand_macros(set_constant(base, "time_to_adjust", 2.0)))
    assert g1.edges == g2.edges


def test_simultaneity_rejected_naming_the_cycle():
    with pytest.raises(GraphError) as err:
        _graph("aux a = b\naux b = a")
    assert "a -> b -> a" in str(err.value) or "b -> a -> b" in str(err.value)


def test_longer_algebraic_cycle_rejected():
    with pytest.raises(GraphError, match="algebraic cycle"):
        _graph("aux a = c\naux b = a\naux c = b")


def test_stock_breaks_algebraic_cycles():
    g = _graph("stock S = 1 [+f]\nflow f = S * 0.5")
    assert Edge("S", "f", "equation") in g.edges


def test_initial_value_references_make_no_edges():
    g = _graph("stock S = seed * 2 [+f]\nflow f = 1\nconst seed = 10")
    assert not any(e.source == "seed" for e in g.edges)


def test_previous_memory_makes_no_edge():
    g = _graph("aux a = PREVIOUS(b, 0)\naux b = a * 2")
    assert not any(e.source == "b" and e.target == "a" for e in g.edges)
    assert Edge("a", "b", "equation") in g.edges


def test_partitions_figure5():
    g = _graph(fixture_text("figure5.sdm"))
    parts = find_partitions(g)
    assert len(parts) == 1
    assert parts[0].members == ("Population", "births", "deaths")


def test_chain_has_no_partitions():
    g = _graph(fixture_text("chain.sdm"))
    assert find_partitions(g) == []


def test_weakly_coupled_systems_share_one_partition_until_cut():
    g = _graph(fixture_text("figure2.sdm"))
    assert len(find_partitions(g)) == 1
    # removing the coupling terms splits the graph into two partitions
    cut = fixture_text("figure2.sdm").replace(" + coupling * wb", "").replace(" + coupling * wa", "")
    g2 = _graph(cut)
    parts = find_partitions(g2)
    assert len(parts) == 2


def test_crossing_edge_for_macro_and_no_hidden_nodes_in_visible_graph():
    g = _graph("aux inp = 1 + STEP(1, 2)\naux outp = DELAY3(inp, 6)")
    crossing = [e for e in g.edges if e.kind == "crossing"]
    assert crossing == [Edge("inp", "outp", "crossing")]
    assert len(g.pathways[crossing[0]]) == 1
    assert all(not n.startswith("~") for e in g.edges for n in (e.source, e.target))


def test_crossing_pathways_for_tau_argument():
    g = _graph("aux inp = 1\nconst tau = 6\naux outp = DELAY3(inp, tau)")
    edge = Edge("tau", "outp", "crossing")
    assert edge in g.edges
    assert len(g.pathways[edge]) == 6
