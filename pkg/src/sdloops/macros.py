"""Expansion of stateful builtins (SMOOTH1, SMOOTH3, DELAY3) into hidden structure.

Each macro call is replaced by a reference to a generated output variable and
a set of hidden stocks and flows wired exactly like the explicit first-order
structure the builtin abbreviates. Hidden names start with `~`, which the
surface language forbids, so they can never collide with user variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import expr as ex
from .model import ModelIR, VariableDef


@dataclass
class MacroInstance:
    id: str
    kind: str  # SMOOTH1 | SMOOTH3 | DELAY3
    owner: str  # variable whose equation contained the call
    output: str  # hidden variable the call was replaced by
    members: tuple[str, ...]
    # argument name -> hidden variables the argument expression feeds directly
    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)
    # filled in by the graph builder: argument -> pathways, plus internal loops
    pathways: dict[str, list[tuple[str, ...]]] = field(default_factory=dict)
    internal_loops: list[tuple[str, ...]] = field(default_factory=list)


@dataclass
class ExpandedModel:
    ir: ModelIR  # the unexpanded source of truth for serialization
    variables: list[VariableDef]
    instances: list[MacroInstance]

    def var_map(self) -> dict[str, VariableDef]:
        return {v.name: v for v in self.variables}

    def hidden(self) -> set[str]:
        return {v.name for v in self.variables if v.name.startswith("~")}


def _third(tau: ex.Expr) -> ex.Expr:
    return ex.Bin("/", tau, ex.Num(3.0))


class _Expander:
    def __init__(self):
        self.new_vars: list[VariableDef] = []
        self.instances: list[MacroInstance] = []
        self.counters: dict[str, int] = {}

    def rewrite(self, e: ex.Expr, owner: str) -> ex.Expr:
        if isinstance(e, (ex.Num, ex.Ref)):
            return e
        if isinstance(e, ex.Neg):
            return ex.Neg(self.rewrite(e.arg, owner))
        if isinstance(e, ex.Bin):
            return ex.Bin(e.op, self.rewrite(e.left, owner), self.rewrite(e.right, owner))
        if isinstance(e, ex.GraphApply):
            return ex.GraphApply(e.table, self.rewrite(e.arg, owner))
        if isinstance(e, ex.Call):
            args = tuple(self.rewrite(a, owner) for a in e.args)
            if e.fn not in ex.MACRO_FNS:
                return ex.Call(e.fn, args)
            return self.expand_call(e.fn, args, owner)
        raise TypeError(f"unexpected node {e!r}")

    def _next_id(self, owner: str, tag: str) -> str:
        key = f"{owner}.{tag}"
        self.counters[key] = self.counters.get(key, 0) + 1
        return f"~{owner}.{tag}{self.counters[key]}"

    def expand_call(self, fn: str, args, owner: str) -> ex.Expr:
        inp, tau = args
        if fn == "SMOOTH1":
            base = self._next_id(owner, "sm")
            stk, flw = f"{base}.s", f"{base}.f"
            self.new_vars += [
                VariableDef(stk, "stock", equation=inp, inflows=(flw,)),
                VariableDef(flw, "flow", equation=ex.Bin("/", ex.Bin("-", inp, ex.Ref(stk)), tau)),
            ]
            self.instances.append(MacroInstance(
                base, fn, owner, output=stk, members=(stk, flw),
                entries={"input": (flw,), "tau": (flw,)},
            ))
            return ex.Ref(stk)
        if fn == "SMOOTH3":
            base = self._next_id(owner, "sm3_")
            stks = [f"{base}.s{i}" for i in (1, 2, 3)]
            flws = [f"{base}.f{i}" for i in (1, 2, 3)]
            srcs = [inp, ex.Ref(stks[0]), ex.Ref(stks[1])]
            for s, f, src in zip(stks, flws, srcs):
                self.new_vars += [
                    VariableDef(s, "stock", equation=inp, inflows=(f,)),
                    VariableDef(f, "flow", equation=ex.Bin("/", ex.Bin("-", src, ex.Ref(s)), _third(tau))),
                ]
            self.instances.append(MacroInstance(
                base, fn, owner, output=stks[2],
                members=tuple(stks) + tuple(flws),
                entries={"input": (flws[0],), "tau": tuple(flws)},
            ))
            return ex.Ref(stks[2])
        if fn == "DELAY3":
            base = self._next_id(owner, "d3_")
            stks = [f"{base}.s{i}" for i in (1, 2, 3)]
            f_in, f2, f3, f_out = (f"{base}.in", f"{base}.f2", f"{base}.f3", f"{base}.out")
            init = ex.Bin("*", inp, _third(tau))
            drains = [f2, f3, f_out]
            self.new_vars.append(VariableDef(f_in, "flow", equation=inp))
            for i, (s, drain) in enumerate(zip(stks, drains)):
                inflow = f_in if i == 0 else drains[i - 1]
                self.new_vars += [
                    VariableDef(s, "stock", equation=init, inflows=(inflow,), outflows=(drain,)),
                    VariableDef(drain, "flow", equation=ex.Bin("/", ex.Ref(s), _third(tau))),
                ]
            self.instances.append(MacroInstance(
                base, fn, owner, output=f_out,
                members=tuple(stks) + (f_in, f2, f3, f_out),
                entries={"input": (f_in,), "tau": (f2, f3, f_out)},
            ))
            return ex.Ref(f_out)
        raise ValueError(fn)


def expand_macros(ir: ModelIR) -> ExpandedModel:
    """Replace every macro call with its hidden stock/flow structure.

    A model without macros expands to itself (same variable objects, no
    instances). Simulating the expanded form is definitionally identical to
    simulating a hand-expanded model with the same structure.
    """
    expander = _Expander()
    out_vars: list[VariableDef] = []
    for v in ir.variables:
        if v.equation is not None and ex.macro_calls(v.equation) and not v.is_stocklike():
            out_vars.append(replace(v, equation=expander.rewrite(v.equation, v.name)))
        else:
            out_vars.append(v)
    return ExpandedModel(ir, out_vars + expander.new_vars, expander.instances)
