"""Tick-accurate simulator of topology discovery in anonymous synchronous networks.

A network of identical constant-memory processors, wired by numbered ports,
maps itself: the root drives a depth-first token around, every visit is
reported to the root with snakes and tokens, and the root's transcript alone
is enough to rebuild the port-labelled graph.
"""
from .constructs import Character, SpeedClass, convert_class, dwell_ticks, rewrite_star
from .engine import (
    Event,
    NetworkState,
    TickBudgetExceeded,
    Transcript,
    init,
    inject_start,
    run_until_terminal,
    snapshot_is_quiescent,
    step,
)
from .mapper import MapState, ProtocolViolation, finalize, ingest_event, map_transcript
from .portgraph import (
    GraphError,
    PortGraph,
    PortPath,
    bfs_oracle_path,
    bidirectional_complete,
    diameter,
    directed_cycle,
    random_strongly_connected,
    rooted_port_isomorphic,
    tree_loop_family,
    validate,
)
from .protocol import run_bca_isolated, run_gtd, run_rca_isolated

__version__ = "0.1.0"

__all__ = [
    "Character",
    "SpeedClass",
    "convert_class",
    "dwell_ticks",
    "rewrite_star",
    "Event",
    "NetworkState",
    "TickBudgetExceeded",
    "Transcript",
    "init",
    "inject_start",
    "run_until_terminal",
    "snapshot_is_quiescent",
    "step",
    "MapState",
    "ProtocolViolation",
    "finalize",
    "ingest_event",
    "map_transcript",
    "GraphError",
    "PortGraph",
    "PortPath",
    "bfs_oracle_path",
    "bidirectional_complete",
    "diameter",
    "directed_cycle",
    "random_strongly_connected",
    "rooted_port_isomorphic",
    "tree_loop_family",
    "validate",
    "run_bca_isolated",
    "run_gtd",
    "run_rca_isolated",
]
