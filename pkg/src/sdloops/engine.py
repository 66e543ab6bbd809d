"""Deterministic Euler simulation of an expanded model.

Stocks integrate `S(t+dt) = S(t) + dt * (inflows - outflows)`. Non-negative
stocks scale their requested outflows down proportionally whenever the update
would go below zero, and the binding flag is recorded for that step; readers
of a constrained outflow always see the constrained value. Conveyors hold
material in dt-sized slats and emit the slat whose transit time has elapsed;
the transit time is sampled when material enters and rounded to a whole
number of slats.

Flows feeding a conveyor are uniflows: their value clamps at zero, since a
slat cannot hold negative material. All other flows are signed.

Every variable (hidden ones included) is recorded at every time point, so all
scoring downstream is a pure function of the trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .macros import ExpandedModel
from .model import DEFAULT_STEP_CAP, SimConfig


class SimulationError(Exception):
    pass


def _slat_count(transit: float, dt: float) -> int:
    return max(1, int(math.floor(transit / dt + 0.5)))


@dataclass
class ConveyorState:
    """In-transit slats keyed by the absolute step at which they exit."""

    dt: float
    pending: dict[int, float] = field(default_factory=dict)

    @classmethod
    def initial(cls, content: float, transit: float, dt: float) -> "ConveyorState":
        # initial material is assumed uniformly spread over the transit window
        state = cls(dt)
        slots = _slat_count(transit, dt)
        if content != 0.0:
            share = content / slots
            for k in range(slots):
                state.pending[k] = share
        return state

    @property
    def content(self) -> float:
        return math.fsum(q for _, q in sorted(self.pending.items()))

    def exiting(self, step: int) -> float:
        return self.pending.get(step, 0.0)

    def advance(self, step: int, inflow_qty: float, transit: float):
        self.pending.pop(step, None)
        if inflow_qty != 0.0:
            exit_step = step + _slat_count(transit, self.dt)
            self.pending[exit_step] = self.pending.get(exit_step, 0.0) + inflow_qty

    def snapshot(self) -> tuple[float, ...]:
        return tuple(q for _, q in sorted(self.pending.items()))


@dataclass
class RunTrace:
    config: SimConfig
    times: np.ndarray
    values: dict[str, np.ndarray]
    binding: dict[str, np.ndarray]
    slats: dict[str, list[tuple[float, ...]]]
    previous_values: dict[int, np.ndarray]  # PREVIOUS call site id -> value returned per step

    @property
    def steps(self) -> int:
        return len(self.times) - 1


class _Env:
    __slots__ = ("values", "time", "graphs", "prev")

    def __init__(self, values, time, graphs, prev):
        self.values = values
        self.time = time
        self.graphs = graphs
        self.prev = prev

    def lookup(self, name):
        return self.values[name]

    def graph_points(self, name):
        return self.graphs[name]

    def previous(self, node):
        return self.prev(node)


def graph_tables(em: ExpandedModel):
    return {
        v.name: (tuple(p[0] for p in v.graph_points), tuple(p[1] for p in v.graph_points))
        for v in em.variables if v.kind == "graphical"
    }


def _kahn(deps: dict[str, set[str]], describe: str) -> list[str]:
    """Deterministic topological sort; ready nodes are processed in name order."""
    incoming = {n: set(d) for n, d in deps.items()}
    consumers: dict[str, set[str]] = {}
    for n, d in incoming.items():
        for m in d:
            consumers.setdefault(m, set()).add(n)
    ready = sorted(n for n, d in incoming.items() if not d)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        freed = []
        for c in consumers.get(node, ()):
            incoming[c].discard(node)
            if not incoming[c]:
                freed.append(c)
        if freed:
            ready = sorted(ready + freed)
    if len(order) != len(incoming):
        stuck = sorted(n for n, d in incoming.items() if d)
        raise SimulationError(f"{describe}: circular dependency among {', '.join(stuck)}")
    return order


def _schedule(em: ExpandedModel) -> list[str]:
    """Per-step evaluation order over non-stock variables plus clamp markers.

    A `~clamp:` marker for a non-negative stock runs once all the stock's
    flows have values; every reader of a constrained outflow is ordered after
    the marker so it sees the constrained value.
    """
    vm = em.var_map()
    nonstock = [v for v in em.variables if not v.is_stocklike()]
    clamp_of: dict[str, str] = {}
    markers: dict[str, object] = {}
    for v in em.variables:
        if v.nonneg and v.outflows:
            marker = f"~clamp:{v.name}"
            markers[marker] = v
            for o in v.outflows:
                clamp_of[o] = marker

    deps: dict[str, set[str]] = {v.name: set() for v in nonstock}
    deps.update({m: set() for m in markers})
    for v in nonstock:
        if v.equation is None:
            continue
        for r in ex.order_refs(v.equation):
            if r in vm and not vm[r].is_stocklike():
                deps[v.name].add(r)
                if r in clamp_of:
                    deps[v.name].add(clamp_of[r])
    for marker, stock in markers.items():
        for f in stock.inflows + stock.outflows:
            deps[marker].add(f)
            if f in clamp_of and clamp_of[f] != marker:
                deps[marker].add(clamp_of[f])
    return _kahn(deps, "evaluation order")


def evaluation_order(em: ExpandedModel) -> list[str]:
    """Order in which non-stock variables are evaluated each step."""
    return [n for n in _schedule(em) if not n.startswith("~clamp:")]


def _init_order(em: ExpandedModel) -> list[str]:
    vm = em.var_map()
    deps = {}
    for v in em.variables:
        need = set()
        if v.equation is not None:
            need |= ex.order_refs(v.equation)
        if v.transit is not None:
            need |= ex.order_refs(v.transit)
        deps[v.name] = {r for r in need if r in vm}
    return _kahn(deps, "initialization")


def simulate(em: ExpandedModel, cfg: SimConfig | None = None,
             step_cap: int = DEFAULT_STEP_CAP) -> RunTrace:
    """Run the model and return the full trace.

    Raises SimulationError naming the variable and time if any value becomes
    non-finite.
    """
    cfg = cfg or em.ir.sim
    cfg.validate(step_cap)
    n_steps = cfg.steps()
    times = cfg.start + cfg.dt * np.arange(n_steps + 1)
    vm = em.var_map()
    graphs = graph_tables(em)
    schedule = _schedule(em)

    conveyor_of_outflow = {vm[v.name].outflows[0]: v.name
                           for v in em.variables if v.kind == "conveyor"}
    conveyor_inflows = {f for v in em.variables if v.kind == "conveyor" for f in v.inflows}
    prev_nodes: list[ex.Call] = []
    for v in em.variables:
        for e in (v.equation, v.transit):
            if e is not None:
                prev_nodes.extend(ex.previous_nodes(e))

    values = {v.name: np.zeros(n_steps + 1) for v in em.variables}
    binding = {v.name: np.zeros(n_steps + 1, dtype=bool)
               for v in em.variables if v.nonneg}
    slats: dict[str, list[tuple[float, ...]]] = {v.name: [] for v in em.variables
                                                 if v.kind == "conveyor"}
    prev_series = {id(n): np.zeros(n_steps + 1) for n in prev_nodes}

    # --- initialization ------------------------------------------------------
    boot: dict[str, float] = {}

    def prev_boot(node):
        return ex.eval_expr(node.args[1], env_boot)

    env_boot = _Env(boot, float(times[0]), graphs, prev_boot)
    conveyors: dict[str, ConveyorState] = {}
    stock_state: dict[str, float] = {}
    for name in _init_order(em):
        v = vm[name]
        try:
            if name in conveyor_of_outflow:
                val = conveyors[conveyor_of_outflow[name]].exiting(0) / cfg.dt
            else:
                val = ex.eval_expr(v.equation, env_boot)
        except ex.EvalError as exc:
            raise SimulationError(f"initializing {name}: {exc}") from None
        if not math.isfinite(val):
            raise SimulationError(f"non-finite initial value for {name}")
        boot[name] = val
        if v.kind == "conveyor":
            transit0 = ex.eval_expr(v.transit, env_boot)
            conveyors[name] = ConveyorState.initial(val, transit0, cfg.dt)
            boot[name] = conveyors[name].content
        if v.is_stocklike():
            stock_state[name] = boot[name]

    # --- main loop -----------------------------------------------------------
    memory: dict[int, float] = {}
    for k in range(n_steps + 1):
        t = float(times[k])
        frame: dict[str, float] = {}
        returned: dict[int, float] = {}

        def prev_step(node, _k=k, _returned=returned):
            key = id(node)
            if key not in _returned:
                _returned[key] = (ex.eval_expr(node.args[1], env) if _k == 0
                                  else memory[key])
            return _returned[key]

        env = _Env(frame, t, graphs, prev_step)

        for v in em.variables:
            if v.kind == "stock":
                frame[v.name] = stock_state[v.name]
        for cname, state in conveyors.items():
            frame[cname] = state.content
            slats[cname].append(state.snapshot())
            frame[vm[cname].outflows[0]] = state.exiting(k) / cfg.dt

        for node in schedule:
            if node.startswith("~clamp:"):
                sname = node[len("~clamp:"):]
                sdef = vm[sname]
                avail = stock_state[sname] / cfg.dt + math.fsum(frame[i] for i in sdef.inflows)
                total_out = math.fsum(frame[o] for o in sdef.outflows)
                if total_out > avail:
                    if total_out <= 0.0 or avail < 0.0:
                        raise SimulationError(
                            f"inflows drive non-negative stock {sname} negative at time {t}")
                    scale = avail / total_out
                    for o in sdef.outflows:
                        frame[o] = frame[o] * scale
                    binding[sname][k] = True
                continue
            if node in conveyor_of_outflow:
                continue  # value already set from the exiting slat
            v = vm[node]
            try:
                val = ex.eval_expr(v.equation, env)
            except ex.EvalError as exc:
                raise SimulationError(f"{node} at time {t}: {exc}") from None
            if not math.isfinite(val):
                raise SimulationError(f"non-finite value for {node} at time {t}")
            if node in conveyor_inflows and val < 0.0:
                val = 0.0
            frame[node] = val

        for name, series in values.items():
            series[k] = frame[name]
        for node in prev_nodes:
            prev_series[id(node)][k] = prev_step(node)

        next_memory = {}
        for node in prev_nodes:
            try:
                next_memory[id(node)] = ex.eval_expr(node.args[0], env)
            except ex.EvalError as exc:
                raise SimulationError(f"PREVIOUS at time {t}: {exc}") from None
        memory = next_memory

        if k == n_steps:
            break
        for v in em.variables:
            if v.kind == "stock":
                net = (math.fsum(frame[i] for i in v.inflows)
                       - math.fsum(frame[o] for o in v.outflows))
                nxt = stock_state[v.name] + cfg.dt * net
                if v.nonneg:
                    if nxt < -1e-9 * max(1.0, abs(stock_state[v.name])):
                        raise SimulationError(
                            f"non-negative stock {v.name} went negative at time {t}")
                    nxt = max(0.0, nxt)
                if not math.isfinite(nxt):
                    raise SimulationError(f"non-finite value for {v.name} at time {t}")
                stock_state[v.name] = nxt
            elif v.kind == "conveyor":
                try:
                    transit = ex.eval_expr(v.transit, env)
                except ex.EvalError as exc:
                    raise SimulationError(f"transit of {v.name} at time {t}: {exc}") from None
                inflow_qty = math.fsum(frame[i] for i in v.inflows) * cfg.dt
                conveyors[v.name].advance(k, inflow_qty, transit)
                stock_state[v.name] = conveyors[v.name].content

    return RunTrace(cfg, times, values, binding, slats, prev_series)


def trace_to_csv(em: ExpandedModel, trace: RunTrace) -> str:
    """CSV dump: `time` first, user variables in declaration order, hidden
    variables (prefixed `~`) after, then one `~binding:` column per
    non-negative stock."""
    user = [v.name for v in em.variables if not v.name.startswith("~")]
    hidden = sorted(v.name for v in em.variables if v.name.startswith("~"))
    bind_cols = sorted(trace.binding)
    header = ["time"] + user + hidden + [f"~binding:{b}" for b in bind_cols]
    lines = [",".join(header)]
    for k in range(len(trace.times)):
        row = [repr(float(trace.times[k]))]
        row += [repr(float(trace.values[n][k])) for n in user + hidden]
        row += [str(int(trace.binding[b][k])) for b in bind_cols]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
