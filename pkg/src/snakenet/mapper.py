"""The root's master computer: rebuilds the network from the transcript.

A stack of node names follows the depth-first token. Every loop report is
preceded by the path characters the root saw while converting snakes, and
that round-trip path is the reporting node's fingerprint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .engine import Event, Transcript
from .portgraph import PortGraph, check

Hops = tuple[tuple[int, int], ...]
Key = tuple[Hops, Hops]
ROOT_KEY: Key = ((), ())


class ProtocolViolation(RuntimeError):
    pass


@dataclass
class MapState:
    names: dict[Key, int] = field(default_factory=dict)
    stack: list[int] = field(default_factory=list)
    edges: set[tuple[int, int, int, int]] = field(default_factory=set)
    complete: bool = False
    started: bool = False
    to_root: list[tuple[int, int]] = field(default_factory=list)
    from_root: list[tuple[int, int]] = field(default_factory=list)
    forward_events: int = 0

    def pending_key(self) -> Key:
        return (tuple(self.to_root), tuple(self.from_root))

    def _name(self, key: Key) -> int:
        if key not in self.names:
            self.names[key] = len(self.names)
        return self.names[key]

    def _reset_path(self) -> None:
        self.to_root.clear()
        self.from_root.clear()


def ingest_event(m: MapState, e: Event) -> MapState:
    """Fold one transcript event into ``m`` (mutated and returned)."""
    if m.complete:
        raise ProtocolViolation(f"event after termination: {e.line()}")
    if e.kind == "Start":
        if m.started:
            raise ProtocolViolation("second Start event")
        m.started = True
        m.names[ROOT_KEY] = 0
        m.stack.append(0)
        return m
    if not m.started:
        raise ProtocolViolation(f"{e.line()} before Start")

    if e.kind == "PathChar":
        c = e.char
        if c.kind == "tail":
            return m
        if c.cls == "IG":
            if m.from_root:
                raise ProtocolViolation("path character toward the root after the return path began")
            m.to_root.append((c.out_port, c.in_port))
        elif c.cls == "ID":
            m.from_root.append((c.out_port, c.in_port))
        else:
            raise ProtocolViolation(f"unexpected path character {e.line()}")
        return m

    if e.kind in ("Loop", "RootEdge"):
        if e.kind == "RootEdge":
            if m.to_root or m.from_root:
                raise ProtocolViolation("root report interrupts a pending path")
            key = ROOT_KEY
        else:
            key = m.pending_key()
            if not key[0] or not key[1]:
                raise ProtocolViolation(f"{e.line()} without a complete path key")
        m._reset_path()
        c = e.char
        if c.cls == "FORWARD":
            if key != ROOT_KEY and key in m.names and m.names[key] == 0:
                raise ProtocolViolation("non-empty path resolved to the root")
            cur = m._name(key)
            m.edges.add((m.stack[-1], c.out_port, cur, c.in_port))
            m.forward_events += 1
            m.stack.append(cur)
        elif c.cls == "BACK":
            if len(m.stack) < 2:
                raise ProtocolViolation("BACK on a stack holding only the root")
            m.stack.pop()
            if key not in m.names or m.names[key] != m.stack[-1]:
                raise ProtocolViolation("BACK reported by a node that is not under the top of the stack")
        else:
            raise ProtocolViolation(f"unexpected loop token {e.line()}")
        return m

    if e.kind == "Terminated":
        if m.stack != [0]:
            raise ProtocolViolation(f"terminated with stack {m.stack}")
        m.complete = True
        return m
    raise ProtocolViolation(f"unknown event kind {e.kind!r}")


def finalize(m: MapState, delta: int | None = None) -> PortGraph:
    """The reconstructed graph; ``delta`` defaults to the largest port seen (at least 2)."""
    if not m.complete:
        raise ProtocolViolation("map is incomplete; no Terminated event seen")
    if m.forward_events != len(m.edges):
        raise ProtocolViolation("an edge was reported twice")
    seen = max((max(o, i) for _, o, _, i in m.edges), default=2)
    delta = max(2, seen) if delta is None else delta
    return check(PortGraph(len(m.names), delta, tuple(sorted(m.edges)), 0))


def map_transcript(events: Transcript | Iterable[Event], delta: int | None = None) -> PortGraph:
    m = MapState()
    for e in events:
        ingest_event(m, e)
    return finalize(m, delta)
