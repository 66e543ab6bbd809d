"""Parser and canonical serializer for the `.sdm` model language.

The language is line-oriented with `#` comments:

    stock NAME = EXPR [+inflow, -outflow] [nonneg]
    conveyor NAME = EXPR [+inflow, -outflow] transit=EXPR
    flow NAME = EXPR
    aux NAME = EXPR
    const NAME = NUMBER
    graph NAME(INPUT) = (x0,y0),(x1,y1),...
    loopscore NAME = a -> b -> c
    pathscore NAME = a -> b
    sim start=0 stop=100 dt=0.25

Serializing an IR and reparsing yields an identical IR.
"""

from __future__ import annotations

import re

from . import expr as ex
from .model import ModelError, ModelIR, SimConfig, VariableDef, validate_model


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


DECL_KEYWORDS = ("stock", "conveyor", "flow", "aux", "const", "graph", "loopscore", "pathscore", "sim")
RESERVED = set(DECL_KEYWORDS) | {"nonneg", "transit"} | set(ex.FUNCTIONS)

_TOKEN_RE = re.compile(
    r"""
    (?P<NUMBER>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ARROW>->)
  | (?P<OP>[-+*/^=,()\[\]])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, line_no: int):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("EOL", "", len(text) + 1))
    return tokens


class _Line:
    """Token cursor over one logical line."""

    def __init__(self, text: str, line_no: int):
        self.tokens = _tokenize(text, line_no)
        self.line_no = line_no
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        if tok[0] != "EOL":
            self.i += 1
        return tok

    def at(self, kind, value=None):
        k, v, _ = self.peek()
        return k == kind and (value is None or v == value)

    def accept(self, kind, value=None):
        if self.at(kind, value):
            return self.next()
        return None

    def expect(self, kind, value=None, what=None):
        tok = self.accept(kind, value)
        if tok is None:
            k, v, col = self.peek()
            found = repr(v) if v else "end of line"
            raise ParseError(f"expected {what or value or kind}, found {found}", self.line_no, col)
        return tok

    def fail(self, message):
        _, _, col = self.peek()
        raise ParseError(message, self.line_no, col)


def _parse_expr(ln: _Line) -> ex.Expr:
    return _parse_sum(ln)


def _parse_sum(ln: _Line) -> ex.Expr:
    node = _parse_term(ln)
    while ln.at("OP", "+") or ln.at("OP", "-"):
        op = ln.next()[1]
        node = ex.Bin(op, node, _parse_term(ln))
    return node


def _parse_term(ln: _Line) -> ex.Expr:
    node = _parse_factor(ln)
    while ln.at("OP", "*") or ln.at("OP", "/"):
        op = ln.next()[1]
        node = ex.Bin(op, node, _parse_factor(ln))
    return node


def _parse_factor(ln: _Line) -> ex.Expr:
    if ln.accept("OP", "-"):
        return ex.Neg(_parse_factor(ln))
    return _parse_power(ln)


def _parse_power(ln: _Line) -> ex.Expr:
    node = _parse_atom(ln)
    if ln.accept("OP", "^"):
        return ex.Bin("^", node, _parse_factor(ln))
    return node


def _parse_atom(ln: _Line) -> ex.Expr:
    if ln.at("NUMBER"):
        return ex.Num(float(ln.next()[1]))
    if ln.at("NAME"):
        _, name, col = ln.next()
        if ln.accept("OP", "("):
            if name not in ex.FUNCTIONS:
                raise ParseError(f"unknown function {name!r}", ln.line_no, col)
            args = [_parse_expr(ln)]
            while ln.accept("OP", ","):
                args.append(_parse_expr(ln))
            ln.expect("OP", ")")
            if len(args) != ex.FUNCTIONS[name]:
                raise ParseError(
                    f"{name} takes {ex.FUNCTIONS[name]} arguments, got {len(args)}",
                    ln.line_no, col)
            return ex.Call(name, tuple(args))
        if name in RESERVED:
            raise ParseError(f"{name!r} is reserved", ln.line_no, col)
        return ex.Ref(name)
    if ln.accept("OP", "("):
        node = _parse_expr(ln)
        ln.expect("OP", ")")
        return node
    ln.fail("expected an expression")


def _parse_name(ln: _Line) -> str:
    _, name, col = ln.expect("NAME", what="a name")
    if name in RESERVED:
        raise ParseError(f"{name!r} is reserved", ln.line_no, col)
    return name


def _parse_number(ln: _Line) -> float:
    sign = -1.0 if ln.accept("OP", "-") else 1.0
    return sign * float(ln.expect("NUMBER", what="a number")[1])


def _parse_bracket_groups(ln: _Line):
    inflows, outflows = [], []
    nonneg = False
    while ln.accept("OP", "["):
        while True:
            if ln.accept("OP", "+"):
                inflows.append(_parse_name(ln))
            elif ln.accept("OP", "-"):
                outflows.append(_parse_name(ln))
            elif ln.at("NAME", "nonneg"):
                ln.next()
                nonneg = True
            else:
                ln.fail("expected +flow, -flow, or nonneg")
            if not ln.accept("OP", ","):
                break
        ln.expect("OP", "]")
    return tuple(inflows), tuple(outflows), nonneg


def _parse_arrow_list(ln: _Line):
    names = [_parse_name(ln)]
    while ln.accept("ARROW"):
        names.append(_parse_name(ln))
    return tuple(names)


def _finish(ln: _Line):
    k, v, col = ln.peek()
    if k != "EOL":
        raise ParseError(f"unexpected {v!r} after declaration", ln.line_no, col)


def parse_model(text: str) -> ModelIR:
    """Parse model source into a validated IR.

    Raises ParseError (with line/column) on syntax problems and ModelError on
    semantic ones.
    """
    variables: list[VariableDef] = []
    declared_loops: list[tuple[str, tuple[str, ...]]] = []
    declared_paths: list[tuple[str, tuple[str, ...]]] = []
    sim = SimConfig()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        ln = _Line(body, line_no)
        kw_tok = ln.expect("NAME", what="a declaration keyword")
        kw = kw_tok[1]
        if kw not in DECL_KEYWORDS:
            raise ParseError(f"unknown declaration {kw!r}", line_no, kw_tok[2])

        if kw == "sim":
            fields = {}
            while ln.at("NAME"):
                _, key, col = ln.next()
                if key not in ("start", "stop", "dt"):
                    raise ParseError(f"unknown sim field {key!r}", line_no, col)
                ln.expect("OP", "=")
                fields[key] = _parse_number(ln)
            _finish(ln)
            sim = SimConfig(
                start=fields.get("start", sim.start),
                stop=fields.get("stop", sim.stop),
                dt=fields.get("dt", sim.dt),
            )
            continue

        if kw in ("loopscore", "pathscore"):
            name = _parse_name(ln)
            ln.expect("OP", "=")
            members = _parse_arrow_list(ln)
            _finish(ln)
            if kw == "loopscore":
                declared_loops.append((name, members))
            else:
                if len(members) < 2:
                    raise ParseError("a path needs at least two variables", line_no, 1)
                declared_paths.append((name, members))
            continue

        if kw == "graph":
            name = _parse_name(ln)
            ln.expect("OP", "(")
            graph_input = _parse_name(ln)
            ln.expect("OP", ")")
            ln.expect("OP", "=")
            points = []
            while True:
                ln.expect("OP", "(")
                x = _parse_number(ln)
                ln.expect("OP", ",")
                y = _parse_number(ln)
                ln.expect("OP", ")")
                points.append((x, y))
                if not ln.accept("OP", ","):
                    break
            _finish(ln)
            variables.append(VariableDef(
                name, "graphical",
                equation=ex.GraphApply(name, ex.Ref(graph_input)),
                graph_input=graph_input,
                graph_points=tuple(points),
                line=line_no,
            ))
            continue

        name = _parse_name(ln)
        ln.expect("OP", "=")
        equation = _parse_expr(ln)
        if kw in ("stock", "conveyor"):
            inflows, outflows, nonneg = _parse_bracket_groups(ln)
            transit = None
            if ln.accept("NAME", "transit"):
                ln.expect("OP", "=")
                transit = _parse_expr(ln)
            if kw == "conveyor" and transit is None:
                ln.fail("conveyor requires transit=EXPR")
            if kw == "stock" and transit is not None:
                ln.fail("transit is only valid on conveyors")
            if kw == "conveyor" and nonneg:
                ln.fail("nonneg is only valid on plain stocks")
            _finish(ln)
            variables.append(VariableDef(
                name, kw, equation,
                inflows=inflows, outflows=outflows, nonneg=nonneg,
                transit=transit, line=line_no,
            ))
        else:
            _finish(ln)
            variables.append(VariableDef(name, kw, equation, line=line_no))

    ir = ModelIR(variables, sim, declared_loops, declared_paths)
    return validate_model(ir)


def _sim_line(sim: SimConfig) -> str:
    return (f"sim start={ex.format_number(sim.start)} "
            f"stop={ex.format_number(sim.stop)} dt={ex.format_number(sim.dt)}")


def serialize_model(ir: ModelIR) -> str:
    """Canonical text form of an IR; parse(serialize(ir)) == ir."""
    lines = [_sim_line(ir.sim)]
    for v in ir.variables:
        if v.kind == "graphical":
            pts = ",".join(
                f"({ex.format_number(x)},{ex.format_number(y)})" for x, y in v.graph_points)
            lines.append(f"graph {v.name}({v.graph_input}) = {pts}")
            continue
        decl = f"{v.kind} {v.name} = {ex.serialize_expr(v.equation)}"
        if v.is_stocklike():
            items = [f"+{f}" for f in v.inflows] + [f"-{f}" for f in v.outflows]
            if items:
                decl += f" [{', '.join(items)}]"
            if v.nonneg:
                decl += " [nonneg]"
            if v.transit is not None:
                decl += f" transit={ex.serialize_expr(v.transit)}"
        lines.append(decl)
    for name, members in ir.declared_loops:
        lines.append(f"loopscore {name} = {' -> '.join(members)}")
    for name, members in ir.declared_paths:
        lines.append(f"pathscore {name} = {' -> '.join(members)}")
    return "\n".join(lines) + "\n"


# re-exported for CLI diagnostics
__all__ = ["parse_model", "serialize_model", "ParseError", "ModelError"]
