"""sdloops: simulate stock-and-flow models and explain their behavior.

The toolchain parses a small textual model language (`.sdm`), runs a
deterministic Euler simulation, scores every causal link at every dt,
identifies the feedback loops that dominate behavior over time, and exports
simplified causal loop diagrams at user-chosen detail levels.
"""

__version__ = "0.1.0"

from .model import ModelIR, SimConfig, VariableDef
from .parser import ModelError, ParseError, parse_model, serialize_model
from .macros import ExpandedModel, expand_macros
from .graph import CausalGraph, GraphError, build_causal_graph, find_partitions
from .engine import RunTrace, SimulationError, evaluation_order, simulate
from .pipeline import analyze_model, analyze_source

__all__ = [
    "ModelIR",
    "SimConfig",
    "VariableDef",
    "ModelError",
    "ParseError",
    "parse_model",
    "serialize_model",
    "ExpandedModel",
    "expand_macros",
    "CausalGraph",
    "GraphError",
    "build_causal_graph",
    "find_partitions",
    "RunTrace",
    "SimulationError",
    "evaluation_order",
    "simulate",
    "analyze_model",
    "analyze_source",
    "__version__",
]
