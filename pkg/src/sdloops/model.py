"""Model intermediate representation: variable definitions, sim config, validation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import expr as ex

KINDS = ("stock", "conveyor", "flow", "aux", "const", "graphical")

# hard ceiling on (stop - start) / dt, overridable per call
DEFAULT_STEP_CAP = 1_000_000


class ModelError(Exception):
    """Semantic validation failure; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line


@dataclass(frozen=True)
class SimConfig:
    start: float = 0.0
    stop: float = 10.0
    dt: float = 1.0

    def steps(self) -> int:
        return int(round((self.stop - self.start) / self.dt))

    def validate(self, step_cap: int = DEFAULT_STEP_CAP):
        if not self.dt > 0:
            raise ModelError(f"dt must be positive, got {self.dt}")
        if not self.stop > self.start:
            raise ModelError(f"stop time {self.stop} must exceed start time {self.start}")
        if (self.stop - self.start) / self.dt > step_cap:
            raise ModelError(f"simulation would exceed the step cap of {step_cap}")


@dataclass
class VariableDef:
    name: str
    kind: str
    equation: ex.Expr | None = None
    inflows: tuple[str, ...] = ()
    outflows: tuple[str, ...] = ()
    nonneg: bool = False
    transit: ex.Expr | None = None  # conveyors only
    graph_input: str | None = None  # graphical only
    graph_points: tuple[tuple[float, float], ...] = ()
    line: int = field(default=0, compare=False)

    def is_stocklike(self) -> bool:
        return self.kind in ("stock", "conveyor")


@dataclass
class ModelIR:
    variables: list[VariableDef]
    sim: SimConfig = field(default_factory=SimConfig)
    # name -> member cycle (first member not repeated; closing edge implied)
    declared_loops: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    declared_paths: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)

    def var_map(self) -> dict[str, VariableDef]:
        return {v.name: v for v in self.variables}


def set_constant(ir: ModelIR, name: str, value: float) -> ModelIR:
    """Return a copy of the IR with one constant overridden."""
    vm = ir.var_map()
    if name not in vm:
        raise ModelError(f"unknown override name {name!r}")
    if vm[name].kind != "const":
        raise ModelError(f"override target {name!r} is a {vm[name].kind}, not a const")
    new_vars = [
        replace(v, equation=ex.Num(float(value))) if v.name == name else v
        for v in ir.variables
    ]
    return ModelIR(new_vars, ir.sim, list(ir.declared_loops), list(ir.declared_paths))


def _is_literal(e) -> bool:
    if isinstance(e, ex.Num):
        return True
    return isinstance(e, ex.Neg) and isinstance(e.arg, ex.Num)


def validate_model(ir: ModelIR, step_cap: int = DEFAULT_STEP_CAP):
    """Check referential and structural invariants; raise ModelError on the first failure."""
    ir.sim.validate(step_cap)
    vm = {}
    for v in ir.variables:
        if v.name in vm:
            raise ModelError(f"duplicate name {v.name!r}", v.line)
        vm[v.name] = v

    flows_in: dict[str, str] = {}
    flows_out: dict[str, str] = {}
    for v in ir.variables:
        if v.kind not in KINDS:
            raise ModelError(f"{v.name}: unknown kind {v.kind!r}", v.line)
        if v.is_stocklike():
            for f in v.inflows + v.outflows:
                if f not in vm:
                    raise ModelError(f"{v.name}: flow {f!r} is not defined", v.line)
                if vm[f].kind != "flow":
                    raise ModelError(f"{v.name}: {f!r} is a {vm[f].kind}, not a flow", v.line)
            for f in v.inflows:
                if f in v.outflows:
                    raise ModelError(f"{v.name}: {f!r} listed as both inflow and outflow", v.line)
                if f in flows_in:
                    raise ModelError(f"flow {f!r} is an inflow of both {flows_in[f]!r} and {v.name!r}", v.line)
                flows_in[f] = v.name
            for f in v.outflows:
                if f in flows_out:
                    raise ModelError(f"flow {f!r} is an outflow of both {flows_out[f]!r} and {v.name!r}", v.line)
                flows_out[f] = v.name
        else:
            if v.inflows or v.outflows or v.nonneg or v.transit is not None:
                raise ModelError(f"{v.name}: stock attributes on a {v.kind}", v.line)
        if v.kind == "conveyor":
            if v.transit is None:
                raise ModelError(f"conveyor {v.name} needs a transit time", v.line)
            if len(v.outflows) != 1:
                raise ModelError(
                    f"conveyor {v.name} must declare exactly one outflow "
                    f"(the flow its transit discipline generates)", v.line)
            if ex.macro_calls(v.transit):
                raise ModelError(f"conveyor {v.name}: macros are not allowed in transit time", v.line)
        if v.kind == "graphical":
            if len(v.graph_points) < 2:
                raise ModelError(f"graphical {v.name} needs at least 2 points", v.line)
            xs = [p[0] for p in v.graph_points]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ModelError(f"graphical {v.name}: x values must be strictly increasing", v.line)
            if v.graph_input not in vm:
                raise ModelError(f"graphical {v.name}: input {v.graph_input!r} is not defined", v.line)
        if v.kind == "const" and not _is_literal(v.equation):
            raise ModelError(f"const {v.name} must be a numeric literal", v.line)
        if v.equation is not None:
            for r in ex.refs(v.equation):
                if r not in vm:
                    raise ModelError(f"{v.name}: unresolved reference {r!r}", v.line)
            if v.is_stocklike() and ex.macro_calls(v.equation):
                raise ModelError(
                    f"{v.name}: macros are not allowed in initial-value expressions", v.line)

    # a conveyor's declared outflow is generated by the conveyor itself; its
    # equation must be a bare reference to the conveyor so the causal link is explicit
    for v in ir.variables:
        if v.kind == "conveyor":
            out = vm[v.outflows[0]]
            if not (isinstance(out.equation, ex.Ref) and out.equation.name == v.name):
                raise ModelError(
                    f"conveyor outflow {out.name} must be declared as 'flow {out.name} = {v.name}'",
                    out.line)

    for name, members in ir.declared_loops + ir.declared_paths:
        for m in members:
            if m not in vm:
                raise ModelError(f"declaration {name!r}: unknown variable {m!r}")
    return ir
