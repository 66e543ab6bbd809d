import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdloops import expr as ex
from sdloops.model import ModelError, set_constant
from sdloops.parser import ParseError, parse_model, serialize_model

from conftest import ALL_FIXTURES, fixture_text


def test_minimal_constant_declaration():
    ir = parse_model("const birth_rate = 0.1")
    (v,) = ir.variables
    assert v.kind == "const"
    assert v.equation == ex.Num(0.1)


def test_workforce_fixture_shape():
    ir = parse_model(fixture_text("workforce.sdm"))
    assert len(ir.variables) == 11
    vm = ir.var_map()
    assert vm["Workers"].kind == "stock" and vm["Workers"].nonneg
    assert vm["Apprentices"].kind == "conveyor"
    assert vm["Apprentices"].transit == ex.Ref("training_time")
    kinds = sorted(v.kind for v in ir.variables)
    assert kinds.count("stock") == 1 and kinds.count("conveyor") == 1


def test_trailing_operator_is_a_syntax_error():
    with pytest.raises(ParseError) as err:
        parse_model("flow births = 0.1 *")
    assert err.value.line == 1
    assert err.value.col == 20


def test_unknown_function():
    with pytest.raises(ParseError, match="unknown function"):
        parse_model("aux a = FROB(1, 2)")


def test_duplicate_name():
    with pytest.raises(ModelError, match="duplicate"):
        parse_model("aux a = 1\naux a = 2")


def test_unresolved_reference():
    with pytest.raises(ModelError, match="unresolved reference"):
        parse_model("aux a = missing_thing")


def test_flow_lists_must_resolve_to_flows():
    with pytest.raises(ModelError, match="not defined"):
        parse_model("stock S = 0 [+ghost]")
    with pytest.raises(ModelError, match="not a flow"):
        parse_model("stock S = 0 [+other]\naux other = 1")


def test_reserved_words_rejected_as_names():
    with pytest.raises(ParseError, match="reserved"):
        parse_model("aux stock = 1")
    with pytest.raises(ParseError, match="reserved"):
        parse_model("aux a = nonneg + 1")


def test_wrong_arity_rejected_at_parse_time():
    with pytest.raises(ParseError, match="takes 2 arguments"):
        parse_model("aux a = MIN(1)")
    with pytest.raises(ParseError, match="takes 2 arguments"):
        parse_model("aux a = STEP(1, 2, 3)")


def test_graphical_declaration():
    ir = parse_model("graph eff(load) = (0,1),(0.5,0.8),(1,0.2)\naux load = 0.3")
    g = ir.var_map()["eff"]
    assert g.kind == "graphical"
    assert g.graph_input == "load"
    assert g.graph_points == ((0.0, 1.0), (0.5, 0.8), (1.0, 0.2))


def test_graphical_needs_increasing_x_and_two_points():
    with pytest.raises(ModelError, match="strictly increasing"):
        parse_model("graph g(x) = (0,1),(0,2)\naux x = 1")
    with pytest.raises(ModelError, match="at least 2"):
        parse_model("graph g(x) = (0,1)\naux x = 1")


def test_sim_line_and_defaults():
    ir = parse_model("sim start=2 stop=8 dt=0.5\naux a = 1")
    assert (ir.sim.start, ir.sim.stop, ir.sim.dt) == (2.0, 8.0, 0.5)
    default = parse_model("aux a = 1").sim
    assert (default.start, default.stop, default.dt) == (0.0, 10.0, 1.0)
    with pytest.raises(ModelError, match="dt must be positive"):
        parse_model("sim dt=0\naux a = 1")
    with pytest.raises(ModelError, match="exceed"):
        parse_model("sim stop=1 start=2\naux a = 1")


def test_conveyor_requires_transit_and_bare_outflow_reference():
    with pytest.raises(ParseError, match="transit"):
        parse_model("conveyor C = 10 [+f]\nflow f = 1")
    bad = ("conveyor C = 10 [+i, -o] transit=4\n"
           "flow i = 1\nflow o = C / 2")
    with pytest.raises(ModelError, match="flow o = C"):
        parse_model(bad)


def test_conveyor_exactly_one_outflow():
    with pytest.raises(ModelError, match="exactly one outflow"):
        parse_model("conveyor C = 10 [+i] transit=4\nflow i = 1")


def test_nonneg_only_on_plain_stocks():
    with pytest.raises(ParseError, match="nonneg"):
        parse_model("conveyor C = 10 [+i, -o, nonneg] transit=4\nflow i = 1\nflow o = C")


def test_shared_flow_restrictions():
    src = ("stock A = 1 [+f]\nstock B = 1 [+f]\nflow f = 1")
    with pytest.raises(ModelError, match="inflow of both"):
        parse_model(src)


def test_declared_loop_and_path_lines():
    src = ("stock S = 10 [+g]\nflow g = S * 0.1\n"
           "loopscore growth = S -> g\npathscore into = g -> S")
    ir = parse_model(src)
    assert ir.declared_loops == [("growth", ("S", "g"))]
    assert ir.declared_paths == [("into", ("g", "S"))]
    with pytest.raises(ModelError, match="unknown variable"):
        parse_model("aux a = 1\nloopscore bad = a -> nothing")


def test_macros_forbidden_in_initial_values_and_transit():
    with pytest.raises(ModelError, match="initial-value"):
        parse_model("stock S = SMOOTH1(f, 2) [+f]\nflow f = 1")
    with pytest.raises(ModelError, match="transit"):
        parse_model("conveyor C = 1 [+i, -o] transit=DELAY3(i, 2)\nflow i = 1\nflow o = C")


def test_comments_and_blank_lines_ignored():
    ir = parse_model("# header\n\naux a = 1  # trailing\n")
    assert len(ir.variables) == 1


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_roundtrip_fixpoint_on_fixtures(name):
    ir = parse_model(fixture_text(name))
    text1 = serialize_model(ir)
    ir2 = parse_model(text1)
    assert ir2 == ir
    assert serialize_model(ir2) == text1


def test_set_constant_override():
    ir = parse_model("const c = 5\naux a = c * 2")
    ir2 = set_constant(ir, "c", 7.5)
    assert ir2.var_map()["c"].equation == ex.Num(7.5)
    with pytest.raises(ModelError, match="unknown override"):
        set_constant(ir, "nope", 1.0)
    with pytest.raises(ModelError, match="not a const"):
        set_constant(ir, "a", 1.0)


@given(st.text(alphabet=st.sampled_from(list("abxy =+-*/^()[],.#\n123 stockflowauxconst")),
               max_size=200))
def test_parser_never_crashes_on_arbitrary_text(text):
    # any input either parses or raises one of the two documented diagnostics
    try:
        parse_model(text)
    except (ParseError, ModelError):
        pass


def test_error_positions_are_one_based():
    with pytest.raises(ParseError) as err:
        parse_model("aux ok = 1\naux bad = @")
    assert err.value.line == 2
    assert err.value.col == 11
