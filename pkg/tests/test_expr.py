import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdloops import expr as ex
from sdloops.parser import ParseError, parse_model


class _Env:
    def __init__(self, values=None, time=0.0):
        self.values = values or {}
        self.time = time

    def lookup(self, name):
        return self.values[name]

    def graph_points(self, name):
        raise KeyError(name)

    def previous(self, node):
        raise AssertionError("no PREVIOUS here")


def _parse_equation(text):
    ir = parse_model(f"aux z = {text}\naux x = 1\naux y = 2\n")
    return ir.variables[0].equation


def _eval(text, **values):
    return ex.eval_expr(_parse_equation(text), _Env(values))


def test_arithmetic():
    assert _eval("1 + 2 * 3") == 7
    assert _eval("(1 + 2) * 3") == 9
    assert _eval("2 ^ 3 ^ 2") == 512  # right-associative
    assert _eval("-2 ^ 2") == -4  # unary binds looser than power
    assert _eval("7 / 2") == 3.5
    assert _eval("x - y", x=10, y=4) == 6


def test_min_max_step():
    assert _eval("MIN(3, 5)") == 3
    assert _eval("MAX(3, 5)") == 5
    env = _Env(time=4.0)
    step = _parse_equation("STEP(50, 5)")
    assert ex.eval_expr(step, env) == 0.0
    env.time = 5.0
    assert ex.eval_expr(step, env) == 50.0


def test_division_by_zero_raises_eval_error():
    with pytest.raises(ex.EvalError):
        _eval("1 / (x - x)", x=3)


def test_interpolate_clamps_and_is_linear():
    xs, ys = (0.0, 1.0, 3.0), (10.0, 20.0, 0.0)
    assert ex.interpolate(xs, ys, -5.0) == 10.0
    assert ex.interpolate(xs, ys, 99.0) == 0.0
    assert ex.interpolate(xs, ys, 0.5) == 15.0
    assert ex.interpolate(xs, ys, 2.0) == 10.0


def test_ref_sets_distinguish_previous():
    e = _parse_equation("x + PREVIOUS(y, x * 2)")
    assert ex.refs(e) == {"x", "y"}
    # the memory argument is not a same-step causal input
    assert ex.causal_refs(e) == {"x"}
    # but the initial value is needed when evaluation starts
    assert ex.order_refs(e) == {"x"}
    e2 = _parse_equation("PREVIOUS(y, x)")
    assert ex.causal_refs(e2) == set()
    assert ex.order_refs(e2) == {"x"}


def test_format_number():
    assert ex.format_number(10.0) == "10"
    assert ex.format_number(0.25) == "0.25"
    assert ex.format_number(-3.0) == "-3"
    assert float(ex.format_number(1 / 3)) == 1 / 3


def test_serialize_preserves_structure():
    cases = [
        "a + b * c",
        "(a + b) * c",
        "a - -b",
        "-(a * b)",
        "-a ^ b",
        "(-a) ^ b",
        "a ^ (b + c)",
        "a / b / c",
        "a - (b - c)",
        "MIN(a + 1, MAX(b, 2))",
        "STEP(h, 5) + PREVIOUS(a, 0)",
    ]
    for text in cases:
        tree = _reparse(text)
        assert _reparse(ex.serialize_expr(tree)) == tree, text


def _reparse(text):
    names = "\n".join(f"aux {n} = 1" for n in "abchxy")
    ir = parse_model(f"aux z = {text}\n{names}\n")
    return ir.variables[0].equation


def test_reparse_helper_rejects_bad_syntax():
    with pytest.raises(ParseError):
        _reparse("a +")


_leaf = st.one_of(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(ex.Num),
    st.sampled_from(["a", "b", "c"]).map(ex.Ref),
)


def _combine(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: ex.Bin(*t)),
        children.map(ex.Neg),
        st.tuples(children, children).map(lambda t: ex.Call("MIN", t)),
    )


@given(st.recursive(_leaf, _combine, max_leaves=12))
def test_serialize_parse_roundtrip(tree):
    assert _reparse(ex.serialize_expr(tree)) == tree


def test_unexpanded_macro_refuses_to_evaluate():
    e = _parse_equation("SMOOTH1(x, 4)")
    with pytest.raises(ex.EvalError):
        ex.eval_expr(e, _Env({"x": 1.0}))


def test_power_errors_are_eval_errors():
    with pytest.raises(ex.EvalError):
        _eval("(-2) ^ 0.5")
    with pytest.raises(ex.EvalError):
        _eval("10 ^ 400")
