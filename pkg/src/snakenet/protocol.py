"""Global topology determination: orchestration and isolated subroutine runs.

The per-node rules live in :mod:`snakenet.automaton`; this module drives
whole networks. ``run_gtd`` is the real protocol. ``run_rca_isolated`` and
``run_bca_isolated`` start one root-communication or backwards-communication
exchange on an otherwise idle network and record what happened, which is how
the timing and cleanliness claims get checked.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .automaton import (
    NodeState,
    RcaPhase,
    SimulationFault,
    node_transition,
    start_bca,
    start_rca,
)
from .constructs import Character, display, token
from .engine import (
    NetworkState,
    Observer,
    Transcript,
    default_budget,
    dirty_nodes,
    growing_residue,
    init,
    inject_start,
    run_until_terminal,
)
from .portgraph import PortGraph, PortPath

__all__ = [
    "NodeState",
    "node_transition",
    "RcaTrace",
    "BcaTrace",
    "run_rca_isolated",
    "run_bca_isolated",
    "run_gtd",
    "budget_multiplier",
    "marked_loop",
    "GtdAudit",
]

BUDGET_ENV = "SNAKENET_TICK_BUDGET_MULT"
DEFAULT_MULTIPLIER = 64


def budget_multiplier(explicit: int | None = None) -> int:
    if explicit is not None:
        mult = explicit
    else:
        mult = int(os.environ.get(BUDGET_ENV, DEFAULT_MULTIPLIER))
    if mult < 1:
        raise ValueError("tick budget multiplier must be at least 1")
    return mult


def _hops(chars: list[Character], cls: str) -> tuple[tuple[int, int], ...]:
    return tuple((c.out_port, c.in_port) for c in chars if c.cls == cls and c.kind != "tail")


def marked_loop(s: NetworkState, a: int) -> list[tuple[int, int, int, int]]:
    """Walk the loop marked by the dying snakes, starting and ending at ``a``.

    Returns the edges in travel order. The walk honours the two-designation
    alternation exactly as a loop token would.
    """
    g = s.graph
    alt = {v: st.alt for v, st in enumerate(s.nodes)}
    edges = []
    v, op = a, s.nodes[a].succ1
    for _ in range(4 * g.node_count + 4):
        dst, ip = g.out_map[v][op]
        edges.append((v, op, dst, ip))
        if dst == a:
            return edges
        st = s.nodes[dst]
        if st.is_root:
            if ip != st.pred1:
                break
            op = st.succ2
        else:
            both = st.pred1 and st.pred2
            use = (1 if alt[dst] == 0 else 2) if both else (1 if st.pred1 else 2)
            if use == 1 and ip == st.pred1:
                op = st.succ1
            elif use == 2 and ip == st.pred2:
                op = st.succ2
            else:
                break
            if both:
                alt[dst] ^= 1
        v = dst
    raise SimulationFault("marked loop does not close at the initiator")


@dataclass
class RcaTrace:
    initiator: int
    payload: Character
    ticks: int
    transcript: Transcript
    ig_parents: dict[int, int]  # node -> IG parent in-port, read when the loop is complete
    loop: list[tuple[int, int, int, int]]
    absorbed_tick: int
    residue_after_absorb: dict[str, int]
    quiescent_after: bool
    signals: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def to_root(self) -> tuple[tuple[int, int], ...]:
        return _hops([e.char for e in self.transcript if e.kind == "PathChar"], "IG")

    @property
    def from_root(self) -> tuple[tuple[int, int], ...]:
        return _hops([e.char for e in self.transcript if e.kind == "PathChar"], "ID")

    def path_to_root(self) -> PortPath:
        return PortPath(self.initiator, self.to_root)

    @property
    def loop_length(self) -> int:
        return len(self.loop)

    @property
    def eradicated(self) -> bool:
        return not any(self.residue_after_absorb.values())

    def to_json(self) -> str:
        return json.dumps(
            {
                "initiator": self.initiator,
                "payload": display(self.payload),
                "ticks": self.ticks,
                "loop": self.loop,
                "absorbed_tick": self.absorbed_tick,
                "residue_after_absorb": self.residue_after_absorb,
                "quiescent_after": self.quiescent_after,
                "events": self.transcript.lines(),
            }
        )


@dataclass
class BcaTrace:
    edge: tuple[int, int, int, int]
    payload: Character
    ticks: int
    delivered: bool
    delivered_tick: int
    completed_tick: int
    payload_route: list[int]  # nodes the payload visited, B first
    quiescent_after: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "edge": self.edge,
                "payload": display(self.payload),
                "ticks": self.ticks,
                "delivered": self.delivered,
                "delivered_tick": self.delivered_tick,
                "completed_tick": self.completed_tick,
                "payload_route": self.payload_route,
                "quiescent_after": self.quiescent_after,
            }
        )


def _isolated_budget(g: PortGraph) -> int:
    return 200 * g.node_count + 200


def run_rca_isolated(g: PortGraph, a: int, payload: Character, max_ticks: int | None = None) -> RcaTrace:
    """One root-communication exchange from ``a`` on an idle network."""
    if a == g.root:
        raise ValueError("the root reports directly; it never runs this exchange")
    if payload.cls not in ("FORWARD", "BACK"):
        raise ValueError(f"payload must be FORWARD or BACK, got {display(payload)}")
    s = init(g, dfs_on=False)
    s.transcript.append(0, "Start")
    out: list = []
    s.nodes[a].awake = True
    start_rca(s.nodes[a], payload, out)
    s.inflight = [(*g.out_map[a][op], c) for op, c in out]
    s.wake(a)

    budget = max_ticks or _isolated_budget(g)
    signals: list[tuple[int, int, str]] = []
    ig_parents: dict[int, int] = {}
    loop: list = []
    absorbed = -1
    residue: dict[str, int] | None = None
    done = -1
    while done < 0:
        if s.tick >= budget:
            raise SimulationFault(f"isolated RCA from {a} did not finish within {budget} ticks")
        got = s.advance()
        if absorbed >= 0 and residue is None:
            residue = growing_residue(s, "rca")
        for v, name in got:
            signals.append((s.tick, v, name))
            if name == "rca_loop_marked":
                loop = marked_loop(s, a)
                ig_parents = {u: st.parent["IG"] for u, st in enumerate(s.nodes) if st.parent["IG"]}
            elif name == "rca_absorbed":
                absorbed = s.tick
            elif name == "rca_done":
                done = s.tick
    while s.inflight or s.active:
        if s.tick >= budget:
            raise SimulationFault("isolated RCA left traffic behind")
        s.advance()
    return RcaTrace(
        initiator=a,
        payload=payload,
        ticks=done,
        transcript=s.transcript,
        ig_parents=ig_parents,
        loop=loop,
        absorbed_tick=absorbed,
        residue_after_absorb=residue or {},
        quiescent_after=not dirty_nodes(s) and not s.inflight,
        signals=signals,
    )


def run_bca_isolated(
    g: PortGraph, edge: tuple[int, int, int, int], payload: Character | None = None, max_ticks: int | None = None
) -> BcaTrace:
    """Send ``payload`` backwards across ``edge`` = (A, out_port, B, in_port)."""
    edge = tuple(edge)
    if edge not in set(g.edges):
        raise ValueError(f"edge {edge} is not in the graph")
    a, op, b, ip = edge
    payload = payload or token("DFS", op, ip)
    s = init(g, dfs_on=False)
    out: list = []
    s.nodes[b].awake = True
    start_bca(s.nodes[b], ip, payload, out)
    s.inflight = [(*g.out_map[b][k], c) for k, c in out]
    s.wake(b)

    budget = max_ticks or _isolated_budget(g)
    delivered_tick = -1
    completed = -1
    route = [b]
    while completed < 0 or delivered_tick < 0:
        if s.tick >= budget:
            raise SimulationFault(f"isolated BCA on {edge} did not finish within {budget} ticks")
        got = s.advance()
        for dst, _, c in s.inflight:
            if c.cls == "BDFS" and route[-1] != dst:
                route.append(dst)
        for v, name in got:
            if name == "bca_delivered" and v == a:
                delivered_tick = s.tick
            elif name == "bca_done" and v == b:
                completed = s.tick
    while s.inflight or s.active:
        if s.tick >= budget:
            raise SimulationFault("isolated BCA left traffic behind")
        s.advance()
    return BcaTrace(
        edge=edge,
        payload=payload,
        ticks=completed,
        delivered=delivered_tick >= 0,
        delivered_tick=delivered_tick,
        completed_tick=completed,
        payload_route=route,
        quiescent_after=not dirty_nodes(s) and not s.inflight,
    )


@dataclass
class GtdAudit:
    """Observer collecting the per-exchange cleanliness and exclusivity checks."""

    exchanges: int = 0
    dirty_after: list[tuple[int, str, list[int]]] = field(default_factory=list)
    # cleanup tokens still on a wire toward clean nodes, which absorb them
    stray_tokens: int = 0
    # growing-snake leftovers seen at the moment the root reopened
    stale_at_reopen: list[tuple[int, dict[str, int]]] = field(default_factory=list)
    max_concurrent_rca: int = 0
    # ticks at which the root had predecessor #2 or successor #1 set
    root_extra_ports: list[int] = field(default_factory=list)

    def __call__(self, s: NetworkState, signals) -> None:
        running = sum(1 for st in s.nodes if st.rca_phase is not RcaPhase.IDLE)
        self.max_concurrent_rca = max(self.max_concurrent_rca, running)
        for _, name in signals:
            if name == "rca_loop_marked" and (s.root.pred2 or s.root.succ1):
                self.root_extra_ports.append(s.tick)
            if name == "root_reopened":
                residue = growing_residue(s, "rca")
                if residue["marks"] or residue["characters"]:
                    self.stale_at_reopen.append((s.tick, residue))
            if name in ("rca_done", "bca_done"):
                self.exchanges += 1
                dirty = dirty_nodes(s)
                self.stray_tokens += sum(1 for _, _, c in s.inflight if c.cls != "DFS")
                if dirty:
                    self.dirty_after.append((s.tick, name, dirty))

    @property
    def clean(self) -> bool:
        return not self.dirty_after and not self.stale_at_reopen and not self.root_extra_ports


def run_gtd(
    g: PortGraph,
    max_ticks: int | None = None,
    observer: Observer | None = None,
    multiplier: int | None = None,
) -> tuple[Transcript, int]:
    """Run the whole protocol from an all-quiescent start to the root's termination."""
    if max_ticks is None:
        max_ticks = default_budget(g, budget_multiplier(multiplier))
    s = inject_start(init(g))
    s, transcript = run_until_terminal(s, max_ticks, observer=observer, in_place=True)
    return transcript, s.tick
