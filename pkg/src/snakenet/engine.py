"""Lockstep synchronous executor.

Frames are double-buffered: every processor stepped at tick ``t`` reads only
what was put on the wires at tick ``t-1`` and writes frames that are read at
``t+1``. Only processors that hold something or receive something are
stepped; an idle quiescent processor is a fixed point of the transition, so
skipping it is exact. Growing characters that the receiver would certainly
ignore are dropped before delivery for the same reason.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .automaton import ALL, NodeState, SimulationFault, Todo, advance
from .constructs import GROWING, Character, display, parse
from .portgraph import PortGraph, check


_GROWING = frozenset(GROWING)


class TickBudgetExceeded(RuntimeError):
    def __init__(self, max_ticks: int, state: NetworkState | None = None):
        super().__init__(f"root did not terminate within {max_ticks} ticks")
        self.max_ticks = max_ticks
        self.state = state


class Event(NamedTuple):
    tick: int
    kind: str  # Start | PathChar | Loop | RootEdge | Terminated
    char: Character | None = None

    def line(self) -> str:
        if self.char is None:
            return f"tick={self.tick} event={self.kind}"
        return f"tick={self.tick} event={self.kind}:{display(self.char)}"

    @classmethod
    def from_line(cls, text: str) -> Event:
        tick_part, event_part = text.split()
        tick = int(tick_part.removeprefix("tick="))
        body = event_part.removeprefix("event=")
        if ":" in body:
            kind, char = body.split(":", 1)
            return cls(tick, kind, parse(char))
        return cls(tick, body)


@dataclass
class Transcript:
    events: list[Event] = field(default_factory=list)

    def append(self, tick: int, kind: str, char: Character | None = None) -> None:
        self.events.append(Event(tick, kind, char))

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def lines(self) -> list[str]:
        return [e.line() for e in self.events]

    def to_json(self) -> str:
        return json.dumps({"events": self.lines()})

    @classmethod
    def from_json(cls, text: str) -> Transcript:
        return cls([Event.from_line(x) for x in json.loads(text)["events"]])

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> Transcript:
        return cls([Event.from_line(x) for x in lines if x.strip()])

    def count(self, kind: str, cls: str | None = None) -> int:
        return sum(
            1 for e in self.events if e.kind == kind and (cls is None or (e.char and e.char.cls == cls))
        )


Observer = Callable[["NetworkState", list[tuple[int, str]]], None]


@dataclass
class NetworkState:
    graph: PortGraph
    nodes: list[NodeState]
    inflight: list[tuple[int, int, Character]] = field(default_factory=list)
    tick: int = 0
    transcript: Transcript = field(default_factory=Transcript)
    started: bool = False
    active: set[int] = field(default_factory=set)

    def __post_init__(self) -> None:
        # per node: (dst, in_port) of each out-port, in the node's port order
        out_map = self.graph.out_map
        self._fanout = [[out_map[v][k] for k in st.out_ports] for v, st in enumerate(self.nodes)]

    def copy(self) -> NetworkState:
        return NetworkState(
            self.graph,
            [st.copy() for st in self.nodes],
            list(self.inflight),
            self.tick,
            Transcript(list(self.transcript.events)),
            self.started,
            set(self.active),
        )

    @property
    def root(self) -> NodeState:
        return self.nodes[self.graph.root]

    @property
    def terminated(self) -> bool:
        return self.root.terminal

    def frames(self) -> dict[tuple[int, int, int, int], dict[str, Character]]:
        """In-flight frame of every edge; an empty dict is an all-blank frame."""
        by_dst = {(d, i): (s, o, d, i) for s, o, d, i in self.graph.edges}
        out: dict[tuple[int, int, int, int], dict[str, Character]] = {e: {} for e in self.graph.edges}
        for dst, ip, c in self.inflight:
            out[by_dst[dst, ip]][c.cls] = c
        return out

    def signature(self) -> tuple:
        """Hashable snapshot used for determinism checks."""
        return (
            self.tick,
            tuple(sorted(self.inflight)),
            tuple(st.encode() for st in self.nodes),
            tuple(self.transcript.lines()),
        )

    def wake(self, v: int) -> None:
        self.active.add(v)

    def advance(self, observer: Observer | None = None) -> list[tuple[int, str]]:
        """Advance one tick in place; returns ``(node, signal)`` notes.

        Processors are visited in a fixed order, though any order gives the
        same result since each one reads only last tick's frames.
        """
        nodes = self.nodes
        inbox: dict[int, list[tuple[int, Character]]] = {v: [] for v in self.active}
        growing = _GROWING
        for dst, ip, c in self.inflight:
            cls = c.cls
            if cls in growing:
                # same test as rejects_growing, inlined for speed
                st = nodes[dst]
                if st.visited[cls] and ip != st.parent[cls] and not (cls == "BIG" and st.bca_phase):
                    continue
            box = inbox.get(dst)
            if box is None:
                inbox[dst] = [(ip, c)]
            else:
                box.append((ip, c))
        tick = self.tick + 1
        out_map = self.graph.out_map
        fanout = self._fanout
        nxt: list[tuple[int, int, Character]] = []
        still_active: set[int] = set()
        signals: list[tuple[int, str]] = []
        notes: list = []
        for v, inputs in inbox.items():
            st = nodes[v]
            outs = advance(st, inputs, notes)
            if outs:
                wiring = out_map[v]
                for op, c in outs:
                    if op == ALL:
                        nxt.extend([(d, i, c) for d, i in fanout[v]])
                    elif op in wiring:
                        d, i = wiring[op]
                        nxt.append((d, i, c))
                    else:
                        raise SimulationFault(f"node {v} emitted on an unconnected out-port")
            if st.line or st.todo:
                still_active.add(v)
            if notes:
                for note in notes:
                    if note[0] == "transcript":
                        self.transcript.append(tick, note[1], note[2])
                    else:
                        signals.append((v, note[1]))
                notes.clear()
        self.inflight = nxt
        self.active = still_active
        self.tick = tick
        if observer is not None:
            observer(self, signals)
        return signals


def init(g: PortGraph, dfs_on: bool = True) -> NetworkState:
    """All processors quiescent, all wires blank, tick 0."""
    check(g)
    nodes = [
        NodeState.fresh(
            g.delta,
            g.in_map[v].keys(),
            g.out_map[v].keys(),
            is_root=(v == g.root),
            dfs_on=dfs_on,
        )
        for v in range(g.node_count)
    ]
    return NetworkState(g, nodes)


def inject_start(s: NetworkState) -> NetworkState:
    """The outside nudge that wakes the root; returns a new state."""
    if s.started or s.tick != 0:
        raise SimulationFault("protocol already started")
    if not snapshot_is_quiescent(s, include_dfs=True):
        raise SimulationFault("start requires an all-quiescent network")
    s = s.copy()
    root = s.root
    root.awake = True
    root.dfs_visited = True
    root.todo = Todo.ADVANCE
    root.todo_wait = 0
    s.started = True
    s.transcript.append(0, "Start")
    s.wake(s.graph.root)
    return s


def step(s: NetworkState) -> NetworkState:
    """Pure single tick: the input state is left untouched."""
    s = s.copy()
    s.advance()
    return s


def default_budget(g: PortGraph, multiplier: int = 64) -> int:
    """``multiplier * |E| * (D + 1)`` ticks.

    Every edge costs a fixed number of exchanges, each affine in the loop
    length (at most ``2D``), so ``|E| * (D + 1)`` is the honest scale; with
    ``|E| <= delta * N`` this is still O(N*D).
    """
    from .portgraph import diameter

    return multiplier * len(g.edges) * (diameter(g) + 1)


def run_until_terminal(
    s: NetworkState, max_ticks: int, observer: Observer | None = None, in_place: bool = False
) -> tuple[NetworkState, Transcript]:
    """Step until the root reports termination; overrunning the budget raises."""
    if not in_place:
        s = s.copy()
    while not s.terminated:
        if s.tick >= max_ticks:
            raise TickBudgetExceeded(max_ticks, s)
        s.advance(observer)
    return s, s.transcript


_CLEAN = {}


def _clean_fields(st: NodeState) -> tuple:
    key = (st.delta, st.in_ports, st.out_ports, st.is_root)
    if key not in _CLEAN:
        _CLEAN[key] = NodeState.fresh(st.delta, st.in_ports, st.out_ports, st.is_root).protocol_fields()
    return _CLEAN[key]


def dirty_nodes(s: NetworkState) -> list[int]:
    """Processors whose snake/token/loop fields differ from their initial values."""
    return [v for v, st in enumerate(s.nodes) if st.protocol_fields() != _clean_fields(st)]


def snapshot_is_quiescent(s: NetworkState, include_dfs: bool = False) -> bool:
    """True iff no protocol residue remains anywhere (DFS fields optionally exempt)."""
    if dirty_nodes(s):
        return False
    if any(c.cls != "DFS" or include_dfs for _, _, c in s.inflight):
        return False
    if include_dfs:
        for v, st in enumerate(s.nodes):
            fresh = NodeState.fresh(st.delta, st.in_ports, st.out_ports, st.is_root, st.dfs_on)
            if (st.dfs_visited, st.finished, st.todo, st.after_rca, st.terminal, st.dfs_parent) != (
                fresh.dfs_visited, fresh.finished, fresh.todo, fresh.after_rca, fresh.terminal, fresh.dfs_parent
            ):
                return False
    return True


def growing_residue(s: NetworkState, namespace: str = "rca") -> dict[str, int]:
    """Counts of growing-snake marks, held/in-flight growing characters and KILL tokens."""
    growing = ("IG", "OG") if namespace == "rca" else ("BIG",)
    kill = "KILL" if namespace == "rca" else "BKILL"
    marks = sum(1 for st in s.nodes if st.growing_marks(namespace))
    held = sum(len(st.held(growing)) for st in s.nodes)
    flying = sum(1 for _, _, c in s.inflight if c.cls in growing)
    kills = sum(1 for _, _, c in s.inflight if c.cls == kill)
    return {"marks": marks, "characters": held + flying, "kills": kills}
