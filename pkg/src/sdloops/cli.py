"""Command line interface.

Commands: simulate, analyze, export-cld, export-loops, export-scores.
Exit codes: 0 ok, 1 usage, 2 parse/validation, 3 runtime failure.
The LTM_LOOP_CAP environment variable sets the default loop enumeration cap.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .bundle import BundleError, dumps_bundle, load_bundle, write_text_atomic
from .engine import SimulationError, simulate, trace_to_csv
from .graph import GraphError
from .loops import DEFAULT_LOOP_CAP, LoopError
from .macros import expand_macros
from .model import ModelError, set_constant
from .parser import ParseError, parse_model
from .pipeline import analyze_model
from .scores import ScoreError
from .simplify import SimplificationParams, build_simplified_cld, summary_table, to_dot

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_cap() -> int:
    env = os.environ.get("LTM_LOOP_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"LTM_LOOP_CAP must be an integer, got {env!r}") from None
    return DEFAULT_LOOP_CAP


def _parse_overrides(pairs) -> dict[str, float]:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise _UsageError(f"--set expects name=value, got {pair!r}")
        name, raw = pair.split("=", 1)
        try:
            overrides[name.strip()] = float(raw)
        except ValueError:
            raise _UsageError(f"--set {name}: {raw!r} is not a number") from None
    return overrides


def _read_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from None


def _emit(text: str, out: str | None):
    if out:
        write_text_atomic(out, text)
    else:
        sys.stdout.write(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="sdloops", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sdloops {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a model and dump the trace as CSV")
    p.add_argument("model")
    p.add_argument("--set", dest="sets", action="append", metavar="NAME=VALUE",
                   help="override a constant (repeatable)")
    p.add_argument("-o", "--output", help="trace CSV path (default: stdout)")

    p = sub.add_parser("analyze", help="simulate, score links, and identify loops")
    p.add_argument("model")
    p.add_argument("--set", dest="sets", action="append", metavar="NAME=VALUE")
    p.add_argument("--loop-cap", type=int, default=None,
                   help="max enumerated loops before strongest-path fallback")
    p.add_argument("--declare-loop", dest="declared", action="append", metavar="a,b,c",
                   help="score this cycle regardless of importance (repeatable)")
    p.add_argument("--include-trace", action="store_true",
                   help="embed the full variable trace in the bundle")
    p.add_argument("-o", "--output", help="bundle path (default: <model>.analysis.json)")

    p = sub.add_parser("export-cld", help="simplified CLD (DOT) from a bundle")
    p.add_argument("bundle")
    p.add_argument("--link-threshold", type=float, default=0.0)
    p.add_argument("--loop-threshold", type=float, default=0.0)
    p.add_argument("--keep-flows", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("-o", "--output", help="DOT path (default: stdout)")

    p = sub.add_parser("export-loops", help="loop inventory CSV from a bundle")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", help="inventory CSV path (default: stdout)")
    p.add_argument("--series", help="also write per-step relative loop scores here")

    p = sub.add_parser("export-scores", help="per-step link score CSV from a bundle")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    return parser


def _cmd_simulate(args) -> int:
    ir = parse_model(_read_model(args.model))
    for name, value in _parse_overrides(args.sets).items():
        ir = set_constant(ir, name, value)
    em = expand_macros(ir)
    trace = simulate(em)
    _emit(trace_to_csv(em, trace), args.output)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    text = _read_model(args.model)
    ir = parse_model(text)
    declared = []
    for i, spec in enumerate(args.declared or (), start=1):
        members = tuple(m.strip() for m in spec.split(",") if m.strip())
        if not members:
            raise _UsageError(f"--declare-loop: empty cycle {spec!r}")
        declared.append((f"cli{i}", members))
    cap = args.loop_cap if args.loop_cap is not None else _default_cap()
    bundle = analyze_model(
        ir, source_text=text, path_label=args.model,
        overrides=_parse_overrides(args.sets), loop_cap=cap,
        declared_extra=declared, include_trace=args.include_trace)
    out = args.output or (os.path.splitext(args.model)[0] + ".analysis.json")
    write_text_atomic(out, dumps_bundle(bundle))

    active = [lp for lp in bundle["loops"] if lp["active"]]
    if not active:
        print(f"{out}: no loops active over the run")
    else:
        print(f"{out}: {len(bundle['loops'])} loops ({len(active)} active) "
              f"in {len(bundle['partitions'])} partition(s)")
    return EXIT_OK


def _cmd_export_cld(args) -> int:
    bundle = load_bundle(args.bundle)
    params = SimplificationParams(args.link_threshold, args.loop_threshold, args.keep_flows)
    cld = build_simplified_cld(bundle, params)
    _emit(to_dot(cld), args.output)
    sys.stdout.write(summary_table(cld))
    return EXIT_OK


def _cmd_export_loops(args) -> int:
    bundle = load_bundle(args.bundle)
    lines = ["loop_id,label,partition,mean_abs_rel_score,members"]
    for lp in bundle["loops"]:
        members = " -> ".join(lp["members"])
        lines.append(f"{lp['id']},{lp['label']},{lp['partition']},"
                     f"{lp['mean_abs_relative']!r},{members}")
    _emit("\n".join(lines) + "\n", args.output)
    if args.series:
        rows = ["time,loop_id,relative_score"]
        times = bundle["time"]
        for lp in bundle["loops"]:
            for t, x in enumerate(lp["relative"]):
                rows.append(f"{times[t]!r},{lp['id']},{x!r}")
        write_text_atomic(args.series, "\n".join(rows) + "\n")
    return EXIT_OK


def _cmd_export_scores(args) -> int:
    bundle = load_bundle(args.bundle)
    lines = ["time,source,target,score,relative_score"]
    times = bundle["time"]
    for edge in bundle["edges"]:
        for t in range(len(times)):
            lines.append(f"{times[t]!r},{edge['source']},{edge['target']},"
                         f"{edge['scores'][t]!r},{edge['relative'][t]!r}")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "export-cld": _cmd_export_cld,
    "export-loops": _cmd_export_loops,
    "export-scores": _cmd_export_scores,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    model_path = getattr(args, "model", None) or getattr(args, "bundle", "")
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"{model_path}:{exc.line}:{exc.col}: {exc.message}", file=sys.stderr)
        return EXIT_INVALID
    except ModelError as exc:
        print(f"{model_path}:{exc.line or 0}:1: {exc.message}", file=sys.stderr)
        return EXIT_INVALID
    except (GraphError, LoopError, ScoreError, BundleError) as exc:
        print(f"{model_path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimulationError as exc:
        print(f"{model_path}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
