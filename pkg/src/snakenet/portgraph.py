"""Port-labeled directed multigraphs: the network a protocol run executes on.

An edge is a 4-tuple ``(src, out_port, dst, in_port)``; ports are numbered
``1..delta``. Besides the container this module carries the test-family
generators and the reference oracles (canonical BFS path, rooted
port-preserving isomorphism) used to check protocol runs.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Iterable, Sequence

Edge = tuple[int, int, int, int]


class GraphError(ValueError):
    """Raised for malformed generator arguments or impossible queries."""


@dataclass(frozen=True)
class PortGraph:
    node_count: int
    delta: int
    edges: tuple[Edge, ...]
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))

    @cached_property
    def out_map(self) -> list[dict[int, tuple[int, int]]]:
        """``out_map[v][out_port] -> (dst, in_port)``."""
        table: list[dict[int, tuple[int, int]]] = [{} for _ in range(self.node_count)]
        for src, op, dst, ip in self.edges:
            if 0 <= src < self.node_count:
                table[src].setdefault(op, (dst, ip))
        return table

    @cached_property
    def in_map(self) -> list[dict[int, tuple[int, int]]]:
        """``in_map[v][in_port] -> (src, out_port)``."""
        table: list[dict[int, tuple[int, int]]] = [{} for _ in range(self.node_count)]
        for src, op, dst, ip in self.edges:
            if 0 <= dst < self.node_count:
                table[dst].setdefault(ip, (src, op))
        return table

    def successors(self, v: int) -> list[int]:
        return [dst for dst, _ in self.out_map[v].values()]

    def predecessors(self, v: int) -> list[int]:
        return [src for src, _ in self.in_map[v].values()]

    def relabel(self, mapping: Sequence[int]) -> PortGraph:
        """Rename node ``v`` to ``mapping[v]``; ports are untouched."""
        edges = [(mapping[s], o, mapping[d], i) for s, o, d, i in self.edges]
        return PortGraph(self.node_count, self.delta, tuple(edges), mapping[self.root])

    # -- interchange -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "root": self.root,
            "nodes": self.node_count,
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> PortGraph:
        try:
            edges = tuple(tuple(int(x) for x in e) for e in data["edges"])
            return cls(int(data["nodes"]), int(data["delta"]), edges, int(data.get("root", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> PortGraph:
        return cls.from_dict(json.loads(text))

    def to_dot(self, name: str = "network") -> str:
        lines = [f"digraph {name} {{"]
        for v in range(self.node_count):
            shape = "doublecircle" if v == self.root else "circle"
            lines.append(f"  n{v} [label=\"{v}\", shape={shape}];")
        for s, o, d, i in self.edges:
            lines.append(f"  n{s} -> n{d} [label=\"o{o}/i{i}\"];")
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PortPath:
    """A walk given by its start node and the (out_port, in_port) of each hop."""

    start: int
    hops: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.hops)

    def nodes(self, g: PortGraph) -> list[int]:
        out = [self.start]
        for op, ip in self.hops:
            dst, got_ip = g.out_map[out[-1]][op]
            if got_ip != ip:
                raise GraphError(f"hop {op}/{ip} does not match wiring at node {out[-1]}")
            out.append(dst)
        return out


# -- validation ---------------------------------------------------------------


def _reach(n: int, adj: Sequence[Iterable[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def validate(g: PortGraph) -> list[str]:
    """Return every violated model precondition; an empty list means valid."""
    problems: list[str] = []
    n, delta = g.node_count, g.delta
    if n < 1:
        return [f"node_count must be positive, got {n}"]
    if delta < 2:
        problems.append(f"delta must be >= 2, got {delta}")
    if not 0 <= g.root < n:
        problems.append(f"root {g.root} out of range")
    used_out: dict[tuple[int, int], Edge] = {}
    used_in: dict[tuple[int, int], Edge] = {}
    for e in g.edges:
        s, o, d, i = e
        if not (0 <= s < n and 0 <= d < n):
            problems.append(f"edge {e} references a missing node")
            continue
        if not (1 <= o <= delta and 1 <= i <= delta):
            problems.append(f"edge {e} uses a port outside 1..{delta}")
        if s == d:
            problems.append(f"edge {e} is a self-loop")
        if (s, o) in used_out:
            problems.append(f"out-port reuse: node {s} out-port {o} in {used_out[s, o]} and {e}")
        else:
            used_out[s, o] = e
        if (d, i) in used_in:
            problems.append(f"in-port reuse: node {d} in-port {i} in {used_in[d, i]} and {e}")
        else:
            used_in[d, i] = e
    outs = [0] * n
    ins = [0] * n
    fwd: list[list[int]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    for s, _, d, _ in g.edges:
        if 0 <= s < n and 0 <= d < n:
            outs[s] += 1
            ins[d] += 1
            fwd[s].append(d)
            rev[d].append(s)
    for v in range(n):
        if outs[v] == 0:
            problems.append(f"node {v} has no connected out-port")
        if ins[v] == 0:
            problems.append(f"node {v} has no connected in-port")
    start = g.root if 0 <= g.root < n else 0
    if len(_reach(n, fwd, start)) != n or len(_reach(n, rev, start)) != n:
        problems.append("graph is not strongly connected")
    return problems


def check(g: PortGraph) -> PortGraph:
    problems = validate(g)
    if problems:
        raise GraphError("invalid network: " + "; ".join(problems))
    return g


# -- generators ---------------------------------------------------------------


def random_strongly_connected(n: int, delta: int, seed: int) -> PortGraph:
    """Random backbone cycle plus random extra edges within the port budget.

    Pure in ``(n, delta, seed)``. Ports are drawn from the seeded RNG in
    construction order, so ties in the lowest-in-port rule are exercised.
    """
    if n < 2:
        raise GraphError(f"need at least 2 nodes, got {n}")
    if delta < 2:
        raise GraphError(f"delta must be >= 2, got {delta}")
    rng = random.Random(f"snakenet:{n}:{delta}:{seed}")
    free_out = [list(range(1, delta + 1)) for _ in range(n)]
    free_in = [list(range(1, delta + 1)) for _ in range(n)]
    edges: list[Edge] = []

    def wire(s: int, d: int) -> None:
        o = free_out[s].pop(rng.randrange(len(free_out[s])))
        i = free_in[d].pop(rng.randrange(len(free_in[d])))
        edges.append((s, o, d, i))

    order = list(range(n))
    rng.shuffle(order)
    for k in range(n):
        wire(order[k], order[(k + 1) % n])

    target = rng.randint(0, n * (delta - 1))
    attempts = 0
    added = 0
    while added < target and attempts < 20 * target:
        attempts += 1
        s = rng.randrange(n)
        d = rng.randrange(n)
        if s == d or not free_out[s] or not free_in[d]:
            continue
        wire(s, d)
        added += 1
    return PortGraph(n, delta, tuple(edges), root=0)


def directed_cycle(n: int, delta: int = 2) -> PortGraph:
    if n < 2:
        raise GraphError(f"need at least 2 nodes, got {n}")
    return PortGraph(n, delta, tuple((v, 1, (v + 1) % n, 1) for v in range(n)), root=0)


def bidirectional_complete(n: int) -> PortGraph:
    """Every ordered pair wired once; out-port k of v leads to the k-th other node."""
    delta = max(2, n - 1)
    edges = []
    for v in range(n):
        others = [w for w in range(n) if w != v]
        for k, w in enumerate(others, start=1):
            senders = [u for u in range(n) if u != w]
            edges.append((v, k, w, senders.index(v) + 1))
    return PortGraph(n, delta, tuple(edges), root=0)


def tree_loop_family(depth: int, leaf_order: Sequence[int]) -> PortGraph:
    """Full binary tree with edges both ways plus a directed loop over the leaves.

    Nodes use heap numbering (root 0, children ``2k+1``/``2k+2``); leaves are
    labelled ``1..2**depth`` left to right and the loop visits them in
    ``leaf_order``. Internal nodes reach children on out-ports 1/2 and their
    parent on out-port 3; leaves use port 1 for the tree and port 2 for the loop.
    """
    if depth < 1:
        raise GraphError(f"depth must be >= 1, got {depth}")
    leaves = 2**depth
    order = [int(x) for x in leaf_order]
    if sorted(order) != list(range(1, leaves + 1)):
        raise GraphError(f"leaf_order must be a permutation of 1..{leaves}, got {leaf_order}")
    n = 2 ** (depth + 1) - 1
    first_leaf = leaves - 1
    edges: list[Edge] = []
    for child in range(1, n):
        parent = (child - 1) // 2
        side = 1 if child % 2 == 1 else 2
        up_port = 1 if child >= first_leaf else 3
        edges.append((parent, side, child, up_port))
        edges.append((child, up_port, parent, side))
    leaf_node = [first_leaf + k - 1 for k in order]
    for k in range(leaves):
        edges.append((leaf_node[k], 2, leaf_node[(k + 1) % leaves], 2))
    return PortGraph(n, 3, tuple(edges), root=0)


# -- oracles ------------------------------------------------------------------


def distances_from(g: PortGraph, src: int) -> list[int | None]:
    dist: list[int | None] = [None] * g.node_count
    dist[src] = 0
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in g.successors(v):
            if dist[w] is None:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def diameter(g: PortGraph) -> int:
    best = 0
    for v in range(g.node_count):
        dist = distances_from(g, v)
        if any(d is None for d in dist):
            raise GraphError("diameter undefined: graph is not strongly connected")
        best = max(best, max(dist))
    return best


def bfs_parents(g: PortGraph, src: int, silent: Iterable[int] = ()) -> dict[int, tuple[int, int, int]]:
    """Parent edges of the tree a flood from ``src`` carves.

    Maps each reached node to ``(parent, out_port, in_port)``. Among in-edges
    from the previous layer the lowest in-port wins. Nodes in ``silent`` are
    reached but never forward (a terminator that swallows the flood).
    """
    silent = set(silent)
    layer_of = {src: 0}
    parents: dict[int, tuple[int, int, int]] = {}
    frontier = [src]
    depth = 0
    while frontier:
        depth += 1
        nxt: dict[int, tuple[int, int, int]] = {}
        for v in frontier:
            if v in silent and v != src:
                continue
            for op, (w, ip) in g.out_map[v].items():
                if w in layer_of:
                    continue
                best = nxt.get(w)
                if best is None or ip < best[2]:
                    nxt[w] = (v, op, ip)
        for w, edge in nxt.items():
            layer_of[w] = depth
            parents[w] = edge
        frontier = sorted(nxt)
    return parents


def bfs_oracle_path(g: PortGraph, src: int, dst: int) -> PortPath:
    """The canonical shortest path a surviving growing snake traces."""
    if src == dst:
        raise GraphError("canonical path needs distinct endpoints")
    parents = bfs_parents(g, src)
    if dst not in parents:
        raise GraphError(f"node {dst} unreachable from {src}")
    hops = []
    v = dst
    while v != src:
        p, op, ip = parents[v]
        hops.append((op, ip))
        v = p
    return PortPath(src, tuple(reversed(hops)))


def rooted_port_isomorphic(g1: PortGraph, g2: PortGraph) -> bool:
    """True iff a root-preserving bijection maps edges and both port labels exactly.

    Port labels make the candidate bijection unique, so it is grown by a
    parallel traversal from the roots along out-ports and in-ports.
    """
    if g1.node_count != g2.node_count or len(g1.edges) != len(g2.edges):
        return False
    fwd = {g1.root: g2.root}
    back = {g2.root: g1.root}
    queue = deque([g1.root])
    while queue:
        v = queue.popleft()
        w = fwd[v]
        out1, out2 = g1.out_map[v], g2.out_map[w]
        in1, in2 = g1.in_map[v], g2.in_map[w]
        if out1.keys() != out2.keys() or in1.keys() != in2.keys():
            return False
        pairs = [(out1[p], out2[p]) for p in out1] + [(in1[p], in2[p]) for p in in1]
        for (x1, p1), (x2, p2) in pairs:
            if p1 != p2:
                return False
            if x1 in fwd:
                if fwd[x1] != x2:
                    return False
            elif x2 in back:
                return False
            else:
                fwd[x1] = x2
                back[x2] = x1
                queue.append(x1)
    if len(fwd) != g1.node_count:
        return False
    mapped = {(fwd[s], o, fwd[d], i) for s, o, d, i in g1.edges}
    return mapped == set(g2.edges)


def brute_force_rooted_isomorphic(g1: PortGraph, g2: PortGraph) -> bool:
    """Exhaustive search over every root-fixing bijection; for small graphs only."""
    if g1.node_count != g2.node_count or len(g1.edges) != len(g2.edges):
        return False
    target = set(g2.edges)
    others1 = [v for v in range(g1.node_count) if v != g1.root]
    others2 = [v for v in range(g2.node_count) if v != g2.root]
    for image in permutations(others2):
        mapping = dict(zip(others1, image))
        mapping[g1.root] = g2.root
        if all((mapping[s], o, mapping[d], i) in target for s, o, d, i in g1.edges):
            return True
    return False
