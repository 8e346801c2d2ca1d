"""Command-line front end: generate graphs, run the protocol, benchmark it.

Exit codes: 0 success, 1 reconstruction mismatch, 2 tick budget or
simulation fault, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .automaton import SimulationFault
from .constructs import ConstructError, parse
from .engine import TickBudgetExceeded, Transcript, default_budget
from .mapper import ProtocolViolation, map_transcript
from .portgraph import (
    GraphError,
    PortGraph,
    bidirectional_complete,
    check,
    diameter,
    directed_cycle,
    random_strongly_connected,
    rooted_port_isomorphic,
    tree_loop_family,
)
from .protocol import BUDGET_ENV, budget_multiplier, run_bca_isolated, run_gtd, run_rca_isolated

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_FAULT = 2
EXIT_USAGE = 64

FAMILIES = ("random", "cycle", "complete", "treeloop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    graph_file: Path | None = None
    family: str | None = None
    n: int | None = None
    delta: int = 3
    seed: int = 0
    depth: int | None = None
    perm: tuple[int, ...] | None = None
    tick_budget_multiplier: int = 64
    outputs: dict[str, Path] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        graph_file = getattr(args, "graph", None)
        family = getattr(args, "family", None)
        if args.command != "bench" and (graph_file is None) == (family is None):
            raise UsageError("give exactly one graph source: --graph FILE or --family NAME")
        perm = None
        if getattr(args, "perm", None):
            try:
                perm = tuple(int(x) for x in args.perm.split(","))
            except ValueError:
                raise UsageError(f"--perm must be comma-separated integers, got {args.perm!r}") from None
        mult = getattr(args, "budget_mult", None)
        try:
            mult = budget_multiplier(mult)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        outputs = {
            name: Path(getattr(args, name))
            for name in ("out", "transcript_out", "map_out")
            if getattr(args, name, None)
        }
        return cls(
            command=args.command,
            graph_file=Path(graph_file) if graph_file else None,
            family=family,
            n=getattr(args, "n", None),
            delta=getattr(args, "delta", 3),
            seed=getattr(args, "seed", 0),
            depth=getattr(args, "depth", None),
            perm=perm,
            tick_budget_multiplier=mult,
            outputs=outputs,
        )

    def graph(self) -> PortGraph:
        if self.graph_file is not None:
            try:
                return check(PortGraph.from_json(self.graph_file.read_text()))
            except (OSError, ValueError, KeyError) as exc:
                raise UsageError(f"cannot load {self.graph_file}: {exc}") from None
        return build_family(self.family, self.n, self.delta, self.seed, self.depth, self.perm)


def build_family(family: str, n, delta, seed, depth, perm) -> PortGraph:
    try:
        if family == "random":
            if n is None:
                raise UsageError("--family random needs --n")
            return random_strongly_connected(n, delta, seed)
        if family == "cycle":
            if n is None:
                raise UsageError("--family cycle needs --n")
            return directed_cycle(n)
        if family == "complete":
            if n is None:
                raise UsageError("--family complete needs --n")
            return bidirectional_complete(n)
        if family == "treeloop":
            if depth is None:
                raise UsageError("--family treeloop needs --depth")
            order = perm if perm is not None else tuple(range(1, 2**depth + 1))
            return tree_loop_family(depth, order)
    except GraphError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown family {family!r}")


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        path.write_text(text if text.endswith("\n") else text + "\n")


def corrupt_transcript(transcript: Transcript) -> Transcript:
    """Negative-control hook: shift the in-port of the first reported edge."""
    events = list(transcript.events)
    for k, e in enumerate(events):
        if e.kind in ("Loop", "RootEdge") and e.char is not None and e.char.cls == "FORWARD":
            c = e.char
            events[k] = e._replace(char=c._replace(in_port=c.in_port % 8 + 1))
            break
    return Transcript(events)


# -- commands -------------------------------------------------------------------


def cmd_generate(cfg: RunConfig) -> int:
    g = cfg.graph()
    out = cfg.outputs.get("out")
    _write(out, g.to_json())
    summary = f"N={g.node_count} delta={g.delta} D={diameter(g)} edges={len(g.edges)}"
    print(summary, file=sys.stderr if out is None else sys.stdout)
    return EXIT_OK


def cmd_run(cfg: RunConfig, corrupt: bool = False) -> int:
    g = cfg.graph()
    d = diameter(g)
    budget = default_budget(g, cfg.tick_budget_multiplier)
    try:
        transcript, ticks = run_gtd(g, max_ticks=budget)
    except TickBudgetExceeded as exc:
        print(f"VERDICT=FAULT reason=budget ticks>{exc.max_ticks} N={g.node_count} D={d}")
        return EXIT_FAULT
    except SimulationFault as exc:
        print(f"VERDICT=FAULT reason=simulation detail={exc}")
        return EXIT_FAULT
    if corrupt:
        transcript = corrupt_transcript(transcript)
    if "transcript_out" in cfg.outputs:
        cfg.outputs["transcript_out"].write_text(transcript.to_json() + "\n")
    try:
        rebuilt = map_transcript(transcript, delta=g.delta)
        same = rooted_port_isomorphic(g, rebuilt)
    except (ProtocolViolation, GraphError) as exc:
        rebuilt, same = None, False
        print(f"replay rejected: {exc}", file=sys.stderr)
    if rebuilt is not None and "map_out" in cfg.outputs:
        cfg.outputs["map_out"].write_text(rebuilt.to_json() + "\n")
    verdict = "ISOMORPHIC" if same else "MISMATCH"
    print(f"VERDICT={verdict} ticks={ticks} N={g.node_count} D={d} edges={len(g.edges)}")
    return EXIT_OK if same else EXIT_MISMATCH


def cmd_rca(cfg: RunConfig, node: int, payload: str) -> int:
    g = cfg.graph()
    try:
        char = parse(payload)
    except ConstructError as exc:
        raise UsageError(str(exc)) from None
    if not 0 <= node < g.node_count:
        raise UsageError(f"--node must be in 0..{g.node_count - 1}")
    try:
        trace = run_rca_isolated(g, node, char)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except SimulationFault as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    _write(cfg.outputs.get("out"), trace.to_json())
    return EXIT_OK


def cmd_bca(cfg: RunConfig, edge: str) -> int:
    g = cfg.graph()
    try:
        parts = tuple(int(x) for x in edge.split(","))
    except ValueError:
        raise UsageError(f"--edge must be A,OUT,B,IN, got {edge!r}") from None
    if len(parts) != 4:
        raise UsageError(f"--edge must be A,OUT,B,IN, got {edge!r}")
    try:
        trace = run_bca_isolated(g, parts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except SimulationFault as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    _write(cfg.outputs.get("out"), trace.to_json())
    return EXIT_OK


def bench_rows(family: str, sizes: list[int], delta: int, seed: int, multiplier: int):
    """Yield one result dict per sweep point; raises on the first failed run."""
    for size in sizes:
        if family == "treeloop":
            g = build_family(family, None, delta, seed, size, None)
        else:
            g = build_family(family, size, delta, seed, None, None)
        d = diameter(g)
        _, ticks = run_gtd(g, max_ticks=default_budget(g, multiplier))
        n = g.node_count
        yield {"n": n, "d": d, "edges": len(g.edges), "ticks": ticks, "ticks_per_nd": round(ticks / (n * d), 4)}


def cmd_bench(cfg: RunConfig, sizes: list[int]) -> int:
    family = cfg.family or "cycle"
    out_path = cfg.outputs.get("out")
    handle = out_path.open("w", newline="") if out_path else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=["n", "d", "edges", "ticks", "ticks_per_nd"])
        writer.writeheader()
        try:
            for row in bench_rows(family, sizes, cfg.delta, cfg.seed, cfg.tick_budget_multiplier):
                writer.writerow(row)
                handle.flush()
        except (TickBudgetExceeded, SimulationFault) as exc:
            handle.write(f"# ABORTED: {exc}\n")
            return EXIT_FAULT
    finally:
        if out_path:
            handle.close()
    return EXIT_OK


def cmd_export_dot(cfg: RunConfig) -> int:
    _write(cfg.outputs.get("out"), cfg.graph().to_dot())
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _graph_source(p: argparse.ArgumentParser, required_family: bool = False) -> None:
    p.add_argument("--graph", help="graph JSON file")
    p.add_argument("--family", choices=FAMILIES, help="built-in generator")
    p.add_argument("--n", type=int, help="node count (random, cycle, complete)")
    p.add_argument("--delta", type=int, default=3, help="port bound for random graphs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, help="tree depth (treeloop)")
    p.add_argument("--perm", help="leaf order for treeloop, e.g. 1,3,2,4")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snakenet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a graph as JSON")
    _graph_source(p)
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("run", help="run the protocol and check the reconstruction")
    _graph_source(p)
    p.add_argument("--budget-mult", type=int, help=f"tick budget multiplier (env {BUDGET_ENV}, default 64)")
    p.add_argument("--transcript-out", help="write the transcript JSON here")
    p.add_argument("--map-out", help="write the reconstructed graph JSON here")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("rca", help="one isolated root-communication exchange")
    _graph_source(p)
    p.add_argument("--node", type=int, required=True, help="initiating node")
    p.add_argument("--payload", default="FWD(1,1)", help="FWD(i,j) or BACK")
    p.add_argument("--out")

    p = sub.add_parser("bca", help="one isolated backwards-communication exchange")
    _graph_source(p)
    p.add_argument("--edge", required=True, help="A,OUT,B,IN")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="timing sweep as CSV")
    p.add_argument("--family", choices=FAMILIES, default="cycle")
    p.add_argument("--sizes", default="8,16,32", help="node counts, or depths for treeloop")
    p.add_argument("--delta", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-mult", type=int)
    p.add_argument("--out")

    p = sub.add_parser("export-dot", help="write a graph as Graphviz DOT")
    _graph_source(p)
    p.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "run":
            return cmd_run(cfg, corrupt=args.corrupt)
        if args.command == "rca":
            return cmd_rca(cfg, args.node, args.payload)
        if args.command == "bca":
            return cmd_bca(cfg, args.edge)
        if args.command == "bench":
            try:
                sizes = [int(x) for x in args.sizes.split(",")]
            except ValueError:
                raise UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
            return cmd_bench(cfg, sizes)
        if args.command == "export-dot":
            return cmd_export_dot(cfg)
    except UsageError as exc:
        print(f"snakenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
