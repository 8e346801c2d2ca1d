"""The per-processor automaton.

Each processor owns a :class:`NodeState` of fixed shape (its size depends on
``delta`` only) and advances it once per global tick from the characters
that arrived on its in-ports. Snake classes never interact, so the handlers
below run side by side; the only cross-class rule is that a KILL (or BKILL)
arriving at a processor wipes every growing character of its namespace that
arrives in the same tick.
"""
from __future__ import annotations

import copy
import enum
import struct
from dataclasses import dataclass, field

from .constructs import (
    BACK,
    BKILL,
    BSETTLE,
    BUNMARK,
    KILL,
    SETTLE,
    UNMARK,
    Character,
    body,
    convert_class,
    head,
    rewrite_star,
    tail,
    token,
)

ALL = -1  # broadcast the same character on every connected out-port
SPREAD = -2  # per-port character: out_port filled with the port it leaves by

# scheduled-emission timers: a speed-1 character received (or created) at tick s
# leaves at s+2, so it spends three ticks at every processor including its origin
HOLD = 2
HOLD_TAIL = 3  # tail waits one extra tick so the grown body character leaves first

LINE_CAPACITY = {"IG": 3, "OG": 3, "BIG": 3, "ID": 2, "OD": 2, "BID": 2}
TOKEN_CAPACITY = 1


class SimulationFault(RuntimeError):
    """Raised on an impossible wire state; indicates an engine bug, not a protocol state."""


class StateOverflow(SimulationFault):
    """A node tried to hold more than its fixed-size state allows."""


class RcaPhase(enum.IntEnum):
    IDLE = 0
    GROWING_IG = 1
    AWAIT_OG = 2
    MARKING_ID = 3
    AWAIT_OD_TAIL = 4
    KILL_AND_LOOP = 5
    SETTLING = 6
    UNMARKING = 7


class BcaPhase(enum.IntEnum):
    IDLE = 0
    GROWING = 1
    AWAIT_RETURN = 2
    MARKING = 3
    AWAIT_TAIL = 4
    KILL_AND_LOOP = 5
    SETTLING = 6
    UNMARKING = 7


class Todo(enum.IntEnum):
    NONE = 0
    RCA = 1
    BCA = 2
    ADVANCE = 3


class After(enum.IntEnum):
    NONE = 0
    ADVANCE = 1
    BOUNCE = 2


@dataclass(slots=True)
class NodeState:
    delta: int
    in_ports: tuple[int, ...]
    out_ports: tuple[int, ...]
    is_root: bool = False
    dfs_on: bool = True
    awake: bool = False

    # growing snakes, per class: visited mark and parent in-port (0 = none)
    visited: dict[str, bool] = field(default_factory=lambda: {"IG": False, "OG": False, "BIG": False})
    parent: dict[str, int] = field(default_factory=lambda: {"IG": 0, "OG": 0, "BIG": 0})
    # dying snakes, per class: 0 idle, 1 head eaten, 2 passing characters through
    stage: dict[str, int] = field(default_factory=lambda: {"ID": 0, "OD": 0, "BID": 0})
    # scheduled emissions: [timer, character, route]
    line: list[list] = field(default_factory=list)

    # marked-loop designations (0 = unset)
    pred1: int = 0
    succ1: int = 0
    pred2: int = 0
    succ2: int = 0
    alt: int = 0
    ig_closed: bool = False

    # BCA loop designations
    bpred: int = 0
    bsucc: int = 0
    btarget: bool = False
    bpayload: Character | None = None

    # RCA initiator registers
    rca_phase: RcaPhase = RcaPhase.IDLE
    rca_payload: Character | None = None
    conv_stage: int = 0

    # BCA initiator registers
    bca_phase: BcaPhase = BcaPhase.IDLE
    bca_port: int = 0
    bca_payload: Character | None = None
    bconv_stage: int = 0

    # depth-first search bookkeeping
    dfs_visited: bool = False
    dfs_parent: tuple[int, int] = (0, 0)  # (sender out-port, own in-port)
    finished: int = 0  # bitmask over out-ports
    todo: Todo = Todo.NONE
    todo_wait: int = 0
    todo_char: Character | None = None
    todo_port: int = 0
    after_rca: After = After.NONE
    bounce: Character | None = None
    terminal: bool = False

    @classmethod
    def fresh(cls, delta: int, in_ports, out_ports, is_root: bool = False, dfs_on: bool = True) -> NodeState:
        return cls(delta, tuple(sorted(in_ports)), tuple(sorted(out_ports)), is_root=is_root, dfs_on=dfs_on)

    def copy(self) -> NodeState:
        return copy.deepcopy(self)

    @property
    def busy(self) -> bool:
        return bool(self.line) or self.todo is not Todo.NONE

    # -- views used by scans and tests ------------------------------------

    def growing_marks(self, namespace: str = "rca") -> bool:
        classes = ("IG", "OG") if namespace == "rca" else ("BIG",)
        return any(self.visited[c] or self.parent[c] for c in classes)

    def held(self, classes) -> list[Character]:
        return [item[1] for item in self.line if item[1].cls in classes]

    def protocol_fields(self) -> tuple:
        """Everything except depth-first-search bookkeeping and the wake flag."""
        return (
            tuple(self.visited.values()),
            tuple(self.parent.values()),
            tuple(self.stage.values()),
            tuple((t, c, r) for t, c, r in self.line if c.cls != "DFS"),
            self.pred1, self.succ1, self.pred2, self.succ2, self.alt, self.ig_closed,
            self.bpred, self.bsucc, self.btarget, self.bpayload,
            int(self.rca_phase), self.rca_payload, self.conv_stage,
            int(self.bca_phase), self.bca_port, self.bca_payload, self.bconv_stage,
        )

    def encode(self) -> bytes:
        """Fixed-width record; its length depends on ``delta`` alone."""
        return encode_state(self)


# -- serialization -------------------------------------------------------------

_NO_CHAR = b"\x00\x00\x00\x00"


def _char_bytes(c: Character | None) -> bytes:
    return _NO_CHAR if c is None else c.encode()


def encode_state(st: NodeState) -> bytes:
    flags = [
        st.is_root, st.dfs_on, st.awake, st.ig_closed, st.btarget, st.alt,
        st.dfs_visited, st.terminal, *st.visited.values(),
    ]
    bits = sum(1 << k for k, f in enumerate(flags) if f)
    mask_bytes = (st.delta + 7) // 8
    if st.finished >> st.delta:
        raise StateOverflow("finished mask wider than delta")
    parts = [
        struct.pack("<H", bits),
        bytes(st.parent.values()),
        bytes(st.stage.values()),
        bytes([st.pred1, st.succ1, st.pred2, st.succ2, st.bpred, st.bsucc]),
        bytes([int(st.rca_phase), st.conv_stage, int(st.bca_phase), st.bca_port, st.bconv_stage]),
        bytes([st.dfs_parent[0], st.dfs_parent[1], int(st.todo), st.todo_wait, st.todo_port, int(st.after_rca)]),
        st.finished.to_bytes(mask_bytes, "little"),
    ]
    for c in (st.bpayload, st.rca_payload, st.bca_payload, st.todo_char, st.bounce):
        parts.append(_char_bytes(c))
    # the line: fixed slot capacity per class
    slots: dict[str, list[list]] = {}
    for item in st.line:
        slots.setdefault(item[1].cls, []).append(item)
    classes = list(LINE_CAPACITY) + ["FORWARD", "BACK", "BDFS", "SETTLE", "BSETTLE"]
    for cls in classes:
        cap = LINE_CAPACITY.get(cls, TOKEN_CAPACITY)
        items = slots.pop(cls, [])
        if len(items) > cap:
            raise StateOverflow(f"{len(items)} held {cls} characters exceed capacity {cap}")
        for t, c, route in items:
            parts.append(bytes([t, route & 0xFF]) + c.encode())
        parts.append(b"\x00" * (6 * (cap - len(items))))
    if slots:
        raise StateOverflow(f"unexpected held classes {sorted(slots)}")
    return b"".join(parts)


# -- transition -----------------------------------------------------------------


def node_transition(state: NodeState, inputs) -> tuple[NodeState, dict[int, dict[str, Character]], list]:
    """Pure wrapper: returns the successor state, per-out-port frames and notes.

    ``inputs`` maps in-port to a frame (class -> character) or is an iterable
    of ``(in_port, character)`` pairs. Notes carry the root's transcript
    entries and instrumentation signals.
    """
    st = state.copy()
    if isinstance(inputs, dict):
        pairs = [(p, c) for p, frame in sorted(inputs.items()) for c in frame.values()]
    else:
        pairs = list(inputs)
    notes: list = []
    outs = advance(st, pairs, notes)
    frames: dict[int, dict[str, Character]] = {p: {} for p in st.out_ports}
    for p, c in expand_broadcasts(st, outs):
        if c.cls in frames[p]:
            raise SimulationFault(f"two {c.cls} characters on out-port {p} in one tick")
        frames[p][c.cls] = c
    return st, frames, notes


def expand_broadcasts(st: NodeState, outs) -> list[tuple[int, Character]]:
    """Replace each ``(ALL, c)`` pair with one pair per connected out-port."""
    return [(k, c) for p, c in outs for k in (st.out_ports if p == ALL else (p,))]


def advance(st: NodeState, inputs, notes: list) -> list[tuple[int, Character]]:
    """Advance ``st`` in place by one tick; returns ``(out_port, character)`` pairs.

    A broadcast comes back as a single pair with out-port ``ALL``; see
    ``expand_broadcasts``.
    """
    out: list[tuple[int, Character]] = []
    if inputs:
        st.awake = True
        if len(inputs) == 1:
            p, c = inputs[0]
            _DISPATCH[c.cls](st, {c.cls: inputs}, c.cls, out, notes)
        else:
            by_cls: dict[str, list[tuple[int, Character]]] = {}
            for p, c in inputs:
                by_cls.setdefault(c.cls, []).append((p, c))
            for cls, items in by_cls.items():
                if len(items) > 1 and len({p for p, _ in items}) < len(items):
                    raise SimulationFault(f"malformed frame: two {cls} characters on one in-port")
            for cls in sorted(by_cls, key=_RANK.__getitem__) if len(by_cls) > 1 else list(by_cls):
                _DISPATCH[cls](st, by_cls, cls, out, notes)

    if st.todo:
        if st.todo_wait == 0:
            _run_todo(st, out, notes)
        else:
            st.todo_wait -= 1

    if st.line:
        keep = []
        for item in st.line:
            if item[0] == 0:
                _emit(st, item[1], item[2], out)
            else:
                item[0] -= 1
                keep.append(item)
        st.line = keep
    return out


def _on_kill(st, by_cls, cls, out, notes):
    if cls == "KILL":
        _kill(st, ("IG", "OG"), KILL, out)
    else:
        _kill(st, ("BIG",), BKILL, out)


def _on_unmark(st, by_cls, cls, out, notes):
    handler = _unmark if cls == "UNMARK" else _bunmark
    for p, _ in by_cls[cls]:
        handler(st, p, out, notes)


def _on_loop(st, by_cls, cls, out, notes):
    handler = _bca_token if cls in ("BDFS", "BSETTLE") else _loop_token
    for p, c in by_cls[cls]:
        handler(st, p, c, out, notes)


def _on_growing(st, by_cls, cls, out, notes):
    # a cleanup token arriving in the same tick wipes the growing characters
    if ("BKILL" if cls == "BIG" else "KILL") in by_cls:
        return
    items = by_cls[cls]
    for p, c in sorted(items) if len(items) > 1 else items:
        _growing(st, p, c, notes)


def _on_dying(st, by_cls, cls, out, notes):
    for p, c in by_cls[cls]:
        _dying(st, p, c, out, notes)


def _on_dfs(st, by_cls, cls, out, notes):
    for p, c in by_cls[cls]:
        _dfs_arrival(st, p, c, notes)


# handlers run in this order when several classes arrive together
_ORDER = (
    ("KILL", _on_kill), ("BKILL", _on_kill),
    ("UNMARK", _on_unmark), ("BUNMARK", _on_unmark),
    ("FORWARD", _on_loop), ("BACK", _on_loop), ("BDFS", _on_loop),
    ("SETTLE", _on_loop), ("BSETTLE", _on_loop),
    ("IG", _on_growing), ("OG", _on_growing), ("BIG", _on_growing),
    ("ID", _on_dying), ("OD", _on_dying), ("BID", _on_dying),
    ("DFS", _on_dfs),
)
_RANK = {cls: k for k, (cls, _) in enumerate(_ORDER)}
_DISPATCH = dict(_ORDER)


def _emit(st: NodeState, c: Character, route: int, out: list) -> None:
    if route == ALL:
        out.append((ALL, c))
    elif route == SPREAD:
        out.extend([(k, Character(c.cls, c.kind, k, None)) for k in st.out_ports])
    else:
        out.append((route, c))
    if c.kind == "tail":
        if c.cls == "IG" and st.rca_phase is RcaPhase.GROWING_IG:
            st.rca_phase = RcaPhase.AWAIT_OG
        elif c.cls == "BIG" and st.bca_phase is BcaPhase.GROWING:
            st.bca_phase = BcaPhase.AWAIT_RETURN


def _schedule(st: NodeState, timer: int, c: Character, route: int) -> None:
    st.line.append([timer, c, route])


# -- cleanup tokens ----------------------------------------------------------


def _kill(st: NodeState, classes: tuple[str, ...], kill_token: Character, out: list) -> None:
    dirty = any(st.visited[c] or st.parent[c] for c in classes) or any(
        item[1].cls in classes for item in st.line
    )
    if not dirty:
        return
    for c in classes:
        st.visited[c] = False
        st.parent[c] = 0
    st.line = [item for item in st.line if item[1].cls not in classes]
    for k in st.out_ports:
        out.append((k, kill_token))


def _appropriate(st: NodeState) -> int:
    if st.pred1 and st.pred2:
        return 1 if st.alt == 0 else 2
    if st.pred1:
        return 1
    if st.pred2:
        return 2
    return 0


def _unmark(st: NodeState, p: int, out: list, notes: list) -> None:
    if st.rca_phase is RcaPhase.UNMARKING:
        if p == st.pred1:
            st.pred1 = st.succ1 = 0
            st.alt = 0
            st.rca_phase = RcaPhase.IDLE
            st.rca_payload = None
            st.conv_stage = 0
            notes.append(("signal", "rca_done"))
            if st.after_rca is After.ADVANCE:
                _set_todo(st, Todo.ADVANCE, wait=1)
            elif st.after_rca is After.BOUNCE:
                _set_todo(st, Todo.BCA, wait=1, char=st.bounce, port=st.bounce.in_port)
                st.bounce = None
            st.after_rca = After.NONE
        return
    if st.is_root:
        if st.pred1 and p == st.pred1:
            out.append((st.succ2, UNMARK))
            st.pred1 = st.succ2 = 0
            st.ig_closed = False
            notes.append(("signal", "root_reopened"))
        return
    k = _appropriate(st)
    if k == 1 and p == st.pred1:
        out.append((st.succ1, UNMARK))
        st.pred1 = st.succ1 = 0
        st.alt = 0
    elif k == 2 and p == st.pred2:
        out.append((st.succ2, UNMARK))
        st.pred2 = st.succ2 = 0
        st.alt = 0


def _loop_token(st: NodeState, p: int, c: Character, out: list, notes: list) -> None:
    settle = c.cls == "SETTLE"
    if st.rca_phase is RcaPhase.KILL_AND_LOOP and not settle:
        if p == st.pred1:
            notes.append(("signal", "rca_absorbed"))
            _schedule(st, HOLD, SETTLE, st.succ1)
            st.rca_phase = RcaPhase.SETTLING
        return
    if st.rca_phase is RcaPhase.SETTLING and settle:
        if p == st.pred1:
            notes.append(("signal", "rca_settled"))
            out.append((st.succ1, UNMARK))
            st.rca_phase = RcaPhase.UNMARKING
        return
    if st.is_root:
        if st.pred1 and p == st.pred1:
            if not settle:
                notes.append(("transcript", "Loop", c))
            _schedule(st, HOLD, c, st.succ2)
        return
    k = _appropriate(st)
    if k == 1 and p == st.pred1:
        _schedule(st, HOLD, c, st.succ1)
    elif k == 2 and p == st.pred2:
        _schedule(st, HOLD, c, st.succ2)
    else:
        return
    if st.pred1 and st.pred2:
        st.alt ^= 1


def _bca_token(st: NodeState, p: int, c: Character, out: list, notes: list) -> None:
    settle = c.cls == "BSETTLE"
    if st.bca_phase is BcaPhase.KILL_AND_LOOP and not settle:
        if p == st.bpred:
            notes.append(("signal", "bca_absorbed"))
            _schedule(st, HOLD, BSETTLE, st.bsucc)
            st.bca_phase = BcaPhase.SETTLING
        return
    if st.bca_phase is BcaPhase.SETTLING and settle:
        if p == st.bpred:
            notes.append(("signal", "bca_settled"))
            out.append((st.bsucc, BUNMARK))
            st.bca_phase = BcaPhase.UNMARKING
        return
    if st.bpred and p == st.bpred:
        if st.btarget and not settle:
            st.bpayload = c
            notes.append(("signal", "bca_payload"))
        _schedule(st, HOLD, c, st.bsucc)


def _bunmark(st: NodeState, p: int, out: list, notes: list) -> None:
    if st.bca_phase is BcaPhase.UNMARKING:
        if p == st.bpred:
            st.bpred = st.bsucc = 0
            st.bca_phase = BcaPhase.IDLE
            st.bca_port = 0
            st.bca_payload = None
            st.bconv_stage = 0
            notes.append(("signal", "bca_done"))
        return
    if not (st.bpred and p == st.bpred):
        return
    via = st.bsucc
    out.append((via, BUNMARK))
    st.bpred = st.bsucc = 0
    if st.btarget:
        st.btarget = False
        got = st.bpayload
        st.bpayload = None
        notes.append(("signal", "bca_delivered"))
        if got is not None and st.dfs_on:
            _dfs_returned(st, via, notes)


# -- snakes ----------------------------------------------------------------------


def rejects_growing(st: NodeState, p: int, cls: str) -> bool:
    """True when a growing character of ``cls`` arriving on ``p`` is surely ignored.

    Off-tree arrivals at a visited node are dropped whatever else happens in
    the tick (the BCA initiator is the exception: it watches its own port).
    The engine uses this to skip work, so it must never say yes wrongly.
    """
    return st.visited[cls] and p != st.parent[cls] and not (cls == "BIG" and st.bca_phase)


def _growing(st: NodeState, p: int, c: Character, notes: list) -> None:
    cls = c.cls
    if rejects_growing(st, p, cls):
        return
    if cls == "IG":
        if st.is_root:
            _root_ig(st, p, c, notes)
            return
        if st.rca_phase is not RcaPhase.IDLE:
            return
    elif cls == "OG":
        if st.is_root:
            return
        if st.rca_phase is not RcaPhase.IDLE:
            _initiator_og(st, p, c)
            return
    elif cls == "BIG" and st.bca_phase is not BcaPhase.IDLE:
        _initiator_big(st, p, c)
        return

    if not st.visited[cls]:
        if c.kind != "head":
            return
        st.visited[cls] = True
        st.parent[cls] = p
    elif p != st.parent[cls]:
        return
    if c.kind == "tail":
        st.line.append([HOLD, body(cls, None), SPREAD])
        st.line.append([HOLD_TAIL, c, ALL])
    else:
        st.line.append([HOLD, c._replace(in_port=p) if c.in_port is None else c, ALL])


def _root_ig(st: NodeState, p: int, c: Character, notes: list) -> None:
    if not st.ig_closed:
        if c.kind != "head":
            return
        st.ig_closed = True
        st.visited["IG"] = True
        st.parent["IG"] = p
        st.visited["OG"] = True
    elif not (st.visited["IG"] and p == st.parent["IG"]):
        return
    rc = rewrite_star(c, p)
    notes.append(("transcript", "PathChar", rc))
    if rc.kind == "tail":
        _schedule(st, HOLD, body("OG", None), SPREAD)
        _schedule(st, HOLD_TAIL, tail("OG"), ALL)
    else:
        _schedule(st, HOLD, convert_class(rc, "OG"), ALL)


def _initiator_og(st: NodeState, p: int, c: Character) -> None:
    if st.rca_phase in (RcaPhase.GROWING_IG, RcaPhase.AWAIT_OG):
        if c.kind != "head":
            return
        rc = rewrite_star(c, p)
        st.visited["OG"] = True
        st.parent["OG"] = p
        st.pred1 = p
        st.succ1 = rc.out_port
        st.conv_stage = 1
        st.rca_phase = RcaPhase.MARKING_ID
        return
    if st.rca_phase is not RcaPhase.MARKING_ID or p != st.parent["OG"]:
        return
    rc = rewrite_star(c, p)
    if rc.kind == "tail":
        _schedule(st, HOLD, tail("ID"), st.succ1)
        st.conv_stage = 0
        st.rca_phase = RcaPhase.AWAIT_OD_TAIL
    elif st.conv_stage == 1:
        _schedule(st, HOLD, head("ID", rc.out_port, rc.in_port), st.succ1)
        st.conv_stage = 2
    else:
        _schedule(st, HOLD, convert_class(rc, "ID"), st.succ1)


def _initiator_big(st: NodeState, p: int, c: Character) -> None:
    if p != st.bca_port:
        return
    if st.bca_phase in (BcaPhase.GROWING, BcaPhase.AWAIT_RETURN):
        if c.kind != "head":
            return
        rc = rewrite_star(c, p)
        st.bpred = p
        st.bsucc = rc.out_port
        st.bconv_stage = 1
        st.bca_phase = BcaPhase.MARKING
        return
    if st.bca_phase is not BcaPhase.MARKING:
        return
    rc = rewrite_star(c, p)
    if rc.kind == "tail":
        _schedule(st, HOLD, tail("BID"), st.bsucc)
        st.bconv_stage = 0
        st.bca_phase = BcaPhase.AWAIT_TAIL
    elif st.bconv_stage == 1:
        _schedule(st, HOLD, head("BID", rc.out_port, rc.in_port), st.bsucc)
        st.bconv_stage = 2
    else:
        _schedule(st, HOLD, convert_class(rc, "BID"), st.bsucc)


def _dying(st: NodeState, p: int, c: Character, out: list, notes: list) -> None:
    cls = c.cls
    if cls == "OD" and st.rca_phase is RcaPhase.AWAIT_OD_TAIL:
        if c.kind == "tail" and p == st.pred1:
            _release_rca_cleanup(st, out, notes)
        return
    if cls == "BID" and st.bca_phase is BcaPhase.AWAIT_TAIL:
        if c.kind == "tail" and p == st.bpred:
            _release_bca_cleanup(st, out, notes)
        return
    if cls == "ID" and st.is_root:
        _root_id(st, p, c, notes)
        return

    stage = st.stage[cls]
    if stage == 0:
        if c.kind != "head":
            return
        if cls == "ID":
            st.pred1, st.succ1 = p, c.out_port
        elif cls == "OD":
            st.pred2, st.succ2 = p, c.out_port
        else:
            st.bpred, st.bsucc = p, c.out_port
        st.stage[cls] = 1
        return
    pred, succ = {"ID": (st.pred1, st.succ1), "OD": (st.pred2, st.succ2), "BID": (st.bpred, st.bsucc)}[cls]
    if p != pred:
        return
    if c.kind == "tail":
        if stage == 1 and cls == "BID":
            st.btarget = True
        st.stage[cls] = 0
        _schedule(st, HOLD, c, succ)
    elif stage == 1:
        _schedule(st, HOLD, c._replace(kind="head"), succ)
        st.stage[cls] = 2
    else:
        _schedule(st, HOLD, c, succ)


def _root_id(st: NodeState, p: int, c: Character, notes: list) -> None:
    stage = st.stage["ID"]
    if stage == 0:
        if c.kind != "head":
            return
        st.pred1, st.succ2 = p, c.out_port
        st.stage["ID"] = 1
        notes.append(("transcript", "PathChar", c))
        return
    if p != st.pred1:
        return
    notes.append(("transcript", "PathChar", c))
    if c.kind == "tail":
        _schedule(st, HOLD, tail("OD"), st.succ2)
        st.stage["ID"] = 0
    elif stage == 1:
        _schedule(st, HOLD, head("OD", c.out_port, c.in_port), st.succ2)
        st.stage["ID"] = 2
    else:
        _schedule(st, HOLD, convert_class(c, "OD"), st.succ2)


def _release_rca_cleanup(st: NodeState, out: list, notes: list) -> None:
    notes.append(("signal", "rca_loop_marked"))
    for c in ("IG", "OG"):
        st.visited[c] = False
        st.parent[c] = 0
    st.line = [item for item in st.line if item[1].cls not in ("IG", "OG")]
    for k in st.out_ports:
        out.append((k, KILL))
    _schedule(st, HOLD, st.rca_payload, st.succ1)
    st.rca_phase = RcaPhase.KILL_AND_LOOP


def _release_bca_cleanup(st: NodeState, out: list, notes: list) -> None:
    notes.append(("signal", "bca_loop_marked"))
    st.visited["BIG"] = False
    st.parent["BIG"] = 0
    st.line = [item for item in st.line if item[1].cls != "BIG"]
    for k in st.out_ports:
        out.append((k, BKILL))
    _schedule(st, HOLD, st.bca_payload, st.bsucc)
    st.bca_phase = BcaPhase.KILL_AND_LOOP


# -- depth-first search ------------------------------------------------------------


def _set_todo(st: NodeState, todo: Todo, wait: int = 0, char: Character | None = None, port: int = 0) -> None:
    if st.todo is not Todo.NONE:
        raise SimulationFault(f"node already has pending action {st.todo.name}")
    st.todo = todo
    st.todo_wait = wait
    st.todo_char = char
    st.todo_port = port


def _dfs_arrival(st: NodeState, p: int, c: Character, notes: list) -> None:
    if not st.dfs_on:
        return
    rc = rewrite_star(c, p)
    fwd = token("FORWARD", rc.out_port, rc.in_port)
    if st.is_root:
        notes.append(("transcript", "RootEdge", fwd))
        _set_todo(st, Todo.BCA, char=rc, port=p)
        return
    if not st.dfs_visited:
        st.dfs_visited = True
        st.dfs_parent = (rc.out_port, rc.in_port)
        st.after_rca = After.ADVANCE
    else:
        st.after_rca = After.BOUNCE
        st.bounce = rc
    _set_todo(st, Todo.RCA, char=fwd)


def _dfs_returned(st: NodeState, via_out_port: int, notes: list) -> None:
    st.finished |= 1 << (via_out_port - 1)
    if st.is_root:
        notes.append(("transcript", "RootEdge", BACK))
        _set_todo(st, Todo.ADVANCE, wait=2)
    else:
        st.after_rca = After.ADVANCE
        _set_todo(st, Todo.RCA, wait=2, char=BACK)


def start_rca(st: NodeState, payload: Character, out: list) -> None:
    if st.is_root:
        raise SimulationFault("the root reports directly and never runs the RCA")
    if st.rca_phase is not RcaPhase.IDLE:
        raise SimulationFault("RCA already running at this node")
    st.rca_phase = RcaPhase.GROWING_IG
    st.rca_payload = payload
    st.visited["IG"] = True
    st.parent["IG"] = 0
    _schedule(st, HOLD, head("IG", None), SPREAD)
    _schedule(st, HOLD_TAIL, tail("IG"), ALL)


def start_bca(st: NodeState, in_port: int, payload: Character, out: list) -> None:
    if st.bca_phase is not BcaPhase.IDLE:
        raise SimulationFault("BCA already running at this node")
    if in_port not in st.in_ports:
        raise SimulationFault(f"in-port {in_port} is not connected")
    st.bca_phase = BcaPhase.GROWING
    st.bca_port = in_port
    st.bca_payload = token("BDFS", payload.out_port, payload.in_port)
    st.visited["BIG"] = True
    st.parent["BIG"] = 0
    _schedule(st, HOLD, head("BIG", None), SPREAD)
    _schedule(st, HOLD_TAIL, tail("BIG"), ALL)


def _run_todo(st: NodeState, out: list, notes: list) -> None:
    todo, char, port = st.todo, st.todo_char, st.todo_port
    st.todo = Todo.NONE
    st.todo_wait = 0
    st.todo_char = None
    st.todo_port = 0
    if todo is Todo.RCA:
        start_rca(st, char, out)
    elif todo is Todo.BCA:
        start_bca(st, port, char, out)
    elif todo is Todo.ADVANCE:
        for k in st.out_ports:
            if not st.finished >> (k - 1) & 1:
                out.append((k, token("DFS", k)))
                return
        if st.is_root:
            st.terminal = True
            notes.append(("transcript", "Terminated", None))
        else:
            o, i = st.dfs_parent
            start_bca(st, i, token("DFS", o, i), out)
