"""Dynamic-network simulation, adversaries, fault injection and oracles."""

from .engine import ExperimentConfig, RoundRecord, RunResult, bound, run, stabilization_round
from .faults import FaultSpec, inject_faults
from .oracle import OracleTree, collective_tree, oracle_history_tree, oracle_view, truncated
from .trace import (
    NetworkTrace,
    RoundGraph,
    generate_trace,
    load_trace,
    loads_trace,
    dumps_trace,
    save_trace,
    shift,
)

__all__ = [
    "ExperimentConfig", "RoundRecord", "RunResult", "bound", "run", "stabilization_round",
    "FaultSpec", "inject_faults", "OracleTree", "collective_tree", "oracle_history_tree",
    "oracle_view", "truncated", "NetworkTrace", "RoundGraph", "generate_trace", "load_trace",
    "loads_trace", "dumps_trace", "save_trace", "shift",
]
