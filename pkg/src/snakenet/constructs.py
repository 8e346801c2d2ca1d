"""On-wire alphabet: snake characters, tokens, speeds and the rewrite rules.

Every symbol a processor can put on a wire is a :class:`Character`. Snake
characters encode one hop of a path as ``(out_port, in_port)``; an
``in_port`` of ``None`` on a head/body character is the unresolved ``*``
that the receiving processor fills in.
"""
from __future__ import annotations

import enum
import re
import struct
from typing import NamedTuple

# growing classes flood and carve BFS trees; dying classes mark a path
GROWING = ("IG", "OG", "BIG")
DYING = ("ID", "OD", "BID")
SNAKE_CLASSES = GROWING + DYING
TOKEN_CLASSES = ("DFS", "FORWARD", "BACK", "KILL", "UNMARK", "BDFS", "BKILL", "BUNMARK", "SETTLE", "BSETTLE")
ALL_CLASSES = SNAKE_CLASSES + TOKEN_CLASSES

# the BCA runs in its own namespace so it can never touch RCA state
BCA_CLASSES = frozenset({"BIG", "BID", "BDFS", "BKILL", "BUNMARK", "BSETTLE"})

KINDS = ("head", "body", "tail", "token")

_CLASS_CODE = {name: k for k, name in enumerate(ALL_CLASSES, start=1)}
_KIND_CODE = {name: k for k, name in enumerate(KINDS, start=1)}
_RECORD = struct.Struct("BBBB")
RECORD_SIZE = _RECORD.size


class ConstructError(ValueError):
    pass


class SpeedClass(enum.Enum):
    SPEED1 = "speed1"
    SPEED3 = "speed3"


def dwell_ticks(speed: SpeedClass) -> int:
    """Ticks a construct spends per hop: speed-1 waits 3, speed-3 waits 1."""
    return 3 if speed is SpeedClass.SPEED1 else 1


SPEED_OF = {cls: SpeedClass.SPEED1 for cls in SNAKE_CLASSES}
SPEED_OF.update(
    FORWARD=SpeedClass.SPEED1,
    BACK=SpeedClass.SPEED1,
    BDFS=SpeedClass.SPEED1,
    SETTLE=SpeedClass.SPEED1,
    BSETTLE=SpeedClass.SPEED1,
    KILL=SpeedClass.SPEED3,
    UNMARK=SpeedClass.SPEED3,
    BKILL=SpeedClass.SPEED3,
    BUNMARK=SpeedClass.SPEED3,
    DFS=SpeedClass.SPEED3,
)


class Character(NamedTuple):
    cls: str
    kind: str
    out_port: int | None = None
    in_port: int | None = None

    @property
    def is_snake(self) -> bool:
        return self.cls in SNAKE_CLASSES

    def __str__(self) -> str:
        return display(self)

    def encode(self) -> bytes:
        """Fixed-width 4-byte record; port 0 stands for ``*`` or no port."""
        return _RECORD.pack(
            _CLASS_CODE[self.cls], _KIND_CODE[self.kind], self.out_port or 0, self.in_port or 0
        )

    @classmethod
    def decode(cls, raw: bytes) -> Character:
        c, k, o, i = _RECORD.unpack(raw)
        return cls(ALL_CLASSES[c - 1], KINDS[k - 1], o or None, i or None)


def head(cls: str, out_port: int, in_port: int | None = None) -> Character:
    return Character(cls, "head", out_port, in_port)


def body(cls: str, out_port: int, in_port: int | None = None) -> Character:
    return Character(cls, "body", out_port, in_port)


def tail(cls: str) -> Character:
    return Character(cls, "tail")


def token(cls: str, out_port: int | None = None, in_port: int | None = None) -> Character:
    return Character(cls, "token", out_port, in_port)


FORWARD_BACK = ("FORWARD", "BACK")
KILL = token("KILL")
UNMARK = token("UNMARK")
BACK = token("BACK")
BKILL = token("BKILL")
BUNMARK = token("BUNMARK")
# one extra lap of the marked loop between payload return and unmarking,
# long enough for the KILL flood to catch every growing-snake front
SETTLE = token("SETTLE")
BSETTLE = token("BSETTLE")


def forward(out_port: int, in_port: int) -> Character:
    return token("FORWARD", out_port, in_port)


def rewrite_star(c: Character, receiving_in_port: int, delta: int | None = None) -> Character:
    """Fill an unresolved ``*`` in-port with the port the character arrived on."""
    if receiving_in_port < 1 or (delta is not None and receiving_in_port > delta):
        raise ConstructError(f"in-port {receiving_in_port} outside 1..{delta}")
    if c.in_port is None and c.kind in ("head", "body"):
        return c._replace(in_port=receiving_in_port)
    if c.cls == "DFS" and c.in_port is None:
        return c._replace(in_port=receiving_in_port)
    return c


def convert_class(c: Character, to_class: str) -> Character:
    """Relabel a snake character into another snake class, keeping kind and ports."""
    if c.cls not in SNAKE_CLASSES:
        raise ConstructError(f"cannot convert token {display(c)}")
    if to_class not in SNAKE_CLASSES:
        raise ConstructError(f"{to_class!r} is not a snake class")
    return c._replace(cls=to_class)


def _port(p: int | None) -> str:
    return "*" if p is None else str(p)


def display(c: Character) -> str:
    if c.cls in SNAKE_CLASSES:
        if c.kind == "tail":
            return f"{c.cls}T"
        suffix = "H" if c.kind == "head" else ""
        return f"{c.cls}{suffix}({_port(c.out_port)},{_port(c.in_port)})"
    if c.cls == "FORWARD":
        return f"FWD({_port(c.out_port)},{_port(c.in_port)})"
    if c.cls in ("DFS", "BDFS"):
        return f"{c.cls}({_port(c.out_port)},{_port(c.in_port)})"
    return c.cls


_SNAKE_RE = re.compile(r"^(BIG|BID|IG|OG|ID|OD)(H?)\((\d+),(\d+|\*)\)$")
_TAIL_RE = re.compile(r"^(BIG|BID|IG|OG|ID|OD)T$")
_PORTED_RE = re.compile(r"^(FWD|DFS|BDFS)\((\d+),(\d+|\*)\)$")


def parse(text: str) -> Character:
    """Inverse of :func:`display`."""
    text = text.strip()
    if m := _TAIL_RE.match(text):
        return tail(m.group(1))
    if m := _SNAKE_RE.match(text):
        ip = None if m.group(4) == "*" else int(m.group(4))
        return Character(m.group(1), "head" if m.group(2) else "body", int(m.group(3)), ip)
    if m := _PORTED_RE.match(text):
        cls = "FORWARD" if m.group(1) == "FWD" else m.group(1)
        ip = None if m.group(3) == "*" else int(m.group(3))
        return token(cls, int(m.group(2)), ip)
    if text in TOKEN_CLASSES:
        return token(text)
    raise ConstructError(f"unrecognised character {text!r}")


Frame = dict  # class name -> Character; at most one slot per class on an edge per tick
