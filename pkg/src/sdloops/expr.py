"""Expression trees for the model language: nodes, evaluation, canonical text.

Nodes are frozen dataclasses so expression trees can be shared freely after
parsing. Stateful evaluation (PREVIOUS memories, simulation time) lives in the
environment object passed to :func:`eval_expr`, never in the tree itself.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass


class EvalError(Exception):
    """Arithmetic failure while evaluating an expression."""


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Ref(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class GraphApply(Expr):
    """Application of a graphical variable's lookup table to an argument."""

    table: str
    arg: Expr


# Builtins with hidden stock/flow structure; replaced during expansion.
MACRO_FNS = ("SMOOTH1", "SMOOTH3", "DELAY3")

# fn name -> arity, checked at parse time.
FUNCTIONS = {
    "MIN": 2,
    "MAX": 2,
    "STEP": 2,
    "PREVIOUS": 2,
    "SMOOTH1": 2,
    "SMOOTH3": 2,
    "DELAY3": 2,
}


def interpolate(xs, ys, x):
    """Piecewise-linear lookup, clamped to the first/last point outside the domain."""
    if x <= xs[0]:
        return ys[0]
    if x >= xs[-1]:
        return ys[-1]
    i = bisect_right(xs, x)
    x0, x1 = xs[i - 1], xs[i]
    y0, y1 = ys[i - 1], ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def eval_expr(e, env):
    """Evaluate an expression against an environment.

    The environment must provide ``lookup(name)``, a ``time`` attribute,
    ``previous(node)`` for PREVIOUS memories, and ``graph_points(name)``
    returning the (xs, ys) table of a graphical variable.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Ref):
        return env.lookup(e.name)
    if isinstance(e, Neg):
        return -eval_expr(e.arg, env)
    if isinstance(e, Bin):
        a = eval_expr(e.left, env)
        b = eval_expr(e.right, env)
        try:
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return a / b
            if e.op == "^":
                r = a**b
                if isinstance(r, complex):
                    raise EvalError(f"complex result from {a} ^ {b}")
                return r
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvalError(str(exc)) from None
        raise EvalError(f"unknown operator {e.op!r}")
    if isinstance(e, Call):
        if e.fn == "MIN":
            return min(eval_expr(e.args[0], env), eval_expr(e.args[1], env))
        if e.fn == "MAX":
            return max(eval_expr(e.args[0], env), eval_expr(e.args[1], env))
        if e.fn == "STEP":
            height = eval_expr(e.args[0], env)
            at = eval_expr(e.args[1], env)
            return height if env.time >= at else 0.0
        if e.fn == "PREVIOUS":
            return env.previous(e)
        raise EvalError(f"unexpanded macro call {e.fn}")
    if isinstance(e, GraphApply):
        xs, ys = env.graph_points(e.table)
        return interpolate(xs, ys, eval_expr(e.arg, env))
    raise EvalError(f"unknown expression node {e!r}")


def walk(e):
    yield e
    if isinstance(e, Neg):
        yield from walk(e.arg)
    elif isinstance(e, Bin):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk(a)
    elif isinstance(e, GraphApply):
        yield from walk(e.arg)


def refs(e):
    """All variable names appearing anywhere in the expression."""
    return {n.name for n in walk(e) if isinstance(n, Ref)}


def causal_refs(e):
    """Variable names that transmit same-step change into this expression.

    Names appearing only inside PREVIOUS(...) are excluded: the memory returns
    prior-step values, so there is no instantaneous causal link (and no
    same-step evaluation-order constraint either).
    """
    out = set()
    if isinstance(e, Ref):
        out.add(e.name)
    elif isinstance(e, Neg):
        out |= causal_refs(e.arg)
    elif isinstance(e, Bin):
        out |= causal_refs(e.left)
        out |= causal_refs(e.right)
    elif isinstance(e, Call):
        if e.fn == "PREVIOUS":
            # the initial-value argument is evaluated at the start step only;
            # it constrains initialization order, not the runtime graph
            pass
        else:
            for a in e.args:
                out |= causal_refs(a)
    elif isinstance(e, GraphApply):
        out |= causal_refs(e.arg)
    return out


def order_refs(e):
    """Names whose values must exist before this expression is evaluated.

    Differs from :func:`causal_refs` on PREVIOUS: the memory argument reads
    prior-step state (no ordering constraint), but the initial-value argument
    is evaluated at the start step, so its references are required.
    """
    out = set()
    if isinstance(e, Ref):
        out.add(e.name)
    elif isinstance(e, Neg):
        out |= order_refs(e.arg)
    elif isinstance(e, Bin):
        out |= order_refs(e.left)
        out |= order_refs(e.right)
    elif isinstance(e, Call):
        if e.fn == "PREVIOUS":
            out |= order_refs(e.args[1])
        else:
            for a in e.args:
                out |= order_refs(a)
    elif isinstance(e, GraphApply):
        out |= order_refs(e.arg)
    return out


def previous_nodes(e):
    """PREVIOUS call sites in preorder (stable across evaluations)."""
    return [n for n in walk(e) if isinstance(n, Call) and n.fn == "PREVIOUS"]


def macro_calls(e):
    return [n for n in walk(e) if isinstance(n, Call) and n.fn in MACRO_FNS]


def format_number(v: float) -> str:
    if v != v or math.isinf(v):
        raise ValueError(f"non-finite literal {v}")
    if float(v).is_integer() and abs(v) <= 1e9:
        return str(int(v))
    return repr(float(v))


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PREC = 3


def _emit(e, parent_prec: int) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Neg):
        body = _emit(e.arg, _NEG_PREC)
        # a bare '-' captures only a power-level operand; parenthesize lower
        if isinstance(e.arg, Bin) and _PREC[e.arg.op] < 4:
            body = f"({_emit(e.arg, 0)})"
        text = f"-{body}"
        return f"({text})" if parent_prec > _NEG_PREC else text
    if isinstance(e, Bin):
        p = _PREC[e.op]
        if e.op == "^":
            left = _emit(e.left, 5)  # left operand of ^ must be atomic
            right = _emit(e.right, _NEG_PREC)
        else:
            left = _emit(e.left, p)
            right = _emit(e.right, p + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if parent_prec > p else text
    if isinstance(e, Call):
        args = ", ".join(_emit(a, 0) for a in e.args)
        return f"{e.fn}({args})"
    if isinstance(e, GraphApply):
        return f"{e.table}({_emit(e.arg, 0)})"
    raise ValueError(f"cannot serialize {e!r}")


def serialize_expr(e) -> str:
    """Canonical text form; reparsing yields a structurally identical tree."""
    return _emit(e, 0)
