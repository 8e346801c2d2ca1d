"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import itertools
import random
import statistics
import time

import pytest
from corpus import rca_cases, reconstruction_graphs, reconstruction_params, treeloop_samples

from snakenet.cli import main
from snakenet.constructs import SpeedClass, dwell_ticks, forward
from snakenet.engine import init, inject_start, run_until_terminal
from snakenet.portgraph import (
    bfs_oracle_path,
    brute_force_rooted_isomorphic,
    diameter,
    directed_cycle,
    random_strongly_connected,
    rooted_port_isomorphic,
    tree_loop_family,
)
from snakenet.protocol import GtdAudit, run_gtd, run_rca_isolated

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def rca_traces():
    rows = []
    for g, a, payload in rca_cases(100):
        rows.append((g, a, run_rca_isolated(g, a, payload)))
    return rows


def test_c1_exact_reconstruction(capsys, verdict):
    argvs = [
        ["run", "--family", "random", "--n", str(n), "--delta", str(d), "--seed", str(k)]
        for n, d, k in reconstruction_params(100)
    ]
    argvs += [
        ["run", "--family", "treeloop", "--depth", str(depth), "--perm", ",".join(map(str, perm))]
        for depth, perm in treeloop_samples(20)
    ]
    failures = []
    start = time.perf_counter()
    for argv in argvs:
        code = main(argv)
        out = capsys.readouterr().out
        if code != 0 or "VERDICT=ISOMORPHIC" not in out:
            failures.append((argv, out.strip()))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    with capsys.disabled():
        verdict.record(
            "C1 exact reconstruction",
            ok,
            f"{len(argvs) - len(failures)}/{len(argvs)} ISOMORPHIC in {elapsed:.1f}s (target < 60s)",
        )
    assert not failures, failures[:3]
    assert elapsed < 60


def test_c2_rca_timing_affine(rca_traces, verdict):
    xs = [t.loop_length for _, _, t in rca_traces]
    ys = [t.ticks for _, _, t in rca_traces]
    fit = statistics.linear_regression(xs, ys)
    worst = max(abs(y - (fit.slope * x + fit.intercept)) / (fit.slope * x + fit.intercept) for x, y in zip(xs, ys))
    # bound: three speed-1 traversals of the loop, each hop costing one speed-1 dwell
    bound = 3 * dwell_ticks(SpeedClass.SPEED1)
    ok = worst < 0.10 and fit.slope <= bound
    verdict.record(
        "C2 RCA timing",
        ok,
        f"ticks = {fit.slope:.2f}*L {fit.intercept:+.2f}, worst residual {worst:.1%}, slope bound {bound}",
    )
    assert worst < 0.10
    assert fit.slope <= bound


def test_c3_gtd_timing_ratio(verdict):
    families = {
        "cycle": [directed_cycle(n) for n in (8, 16, 32, 64)],
        "treeloop": [tree_loop_family(d, tuple(range(1, 2**d + 1))) for d in (1, 2, 3, 4)],
    }
    details, ok = [], True
    for name, graphs in families.items():
        ratios = []
        for g in graphs:
            _, ticks = run_gtd(g)
            ratios.append(ticks / (g.node_count * diameter(g)))
        med = statistics.median(ratios)
        spread = max(max(r / med, med / r) for r in ratios)
        ok &= spread <= 2
        details.append(f"{name} ticks/(N*D) {[round(r, 1) for r in ratios]} spread {spread:.2f}x")
    verdict.record("C3 GTD timing", ok, "; ".join(details))
    assert ok


def test_c4_eradication(rca_traces, verdict):
    dirty = [(a, g.node_count, t.loop_length, t.residue_after_absorb) for g, a, t in rca_traces if not t.eradicated]
    ok = not dirty
    verdict.record(
        "C4 eradication",
        ok,
        f"{len(rca_traces) - len(dirty)}/{len(rca_traces)} clean one tick after absorption"
        + (f"; first residue (a, N, L, counts) {dirty[0]}" if dirty else ""),
    )
    assert ok, dirty


def test_c5_undisturbed_network(verdict):
    exchanges, bad = 0, []
    graphs = list(reconstruction_graphs(100))
    graphs += [tree_loop_family(depth, perm) for depth, perm in treeloop_samples(20)]
    for k, g in enumerate(graphs):
        audit = GtdAudit()
        run_gtd(g, observer=audit)
        exchanges += audit.exchanges
        if not audit.clean or audit.max_concurrent_rca > 1:
            bad.append((k, audit.dirty_after[:1], audit.stale_at_reopen[:1], audit.max_concurrent_rca))
    ok = not bad
    verdict.record(
        "C5 undisturbed network",
        ok,
        f"{len(graphs) - len(bad)}/{len(graphs)} runs clean after all {exchanges} exchanges",
    )
    assert ok, bad[:3]


def _paths_match(g, a):
    tr = run_rca_isolated(g, a, forward(1, 1))
    return tr.to_root == bfs_oracle_path(g, a, g.root).hops and tr.from_root == bfs_oracle_path(g, g.root, a).hops


def test_c6_canonical_paths(verdict):
    small = [g for g in reconstruction_graphs(100) if g.node_count <= 8]
    checked, wrong = 0, []
    for g in small:
        for a in range(1, g.node_count):
            checked += 1
            if not _paths_match(g, a):
                wrong.append((g.node_count, a))
    rng = random.Random("c6")
    for _ in range(1000):
        n = rng.randint(2, 32)
        g = random_strongly_connected(n, rng.randint(2, 4), rng.randrange(10**6))
        a = rng.randrange(1, n)
        checked += 1
        if not _paths_match(g, a):
            wrong.append((n, a))
    ok = not wrong
    verdict.record(
        "C6 canonical paths",
        ok,
        f"{checked - len(wrong)}/{checked} snake paths equal the oracle ({len(small)} small corpus graphs exhaustive)",
    )
    assert ok, wrong[:5]


def test_c7_finite_state(verdict):
    maxima = {}
    for n in (4, 8, 16, 32, 64):
        g = random_strongly_connected(n, 3, n)
        seen = set()

        def watch(s, _signals):
            for v in s.active:
                seen.add(len(s.nodes[v].encode()))

        s, _ = run_until_terminal(inject_start(init(g)), 10**8, observer=watch, in_place=True)
        seen.update(len(st.encode()) for st in s.nodes)
        maxima[n] = max(seen)
    ok = len(set(maxima.values())) == 1
    verdict.record("C7 finite state", ok, f"max encoded NodeState bytes by n: {maxima}")
    assert ok


def _classes(graphs, same):
    reps = []
    for g in graphs:
        if not any(same(g, h) for h in reps):
            reps.append(g)
    return len(reps)


def test_c8_family_distinctness(verdict):
    graphs = [tree_loop_family(2, perm) for perm in itertools.permutations(range(1, 5))]
    fast = _classes(graphs, rooted_port_isomorphic)
    brute = _classes(graphs, brute_force_rooted_isomorphic)
    agree = all(
        rooted_port_isomorphic(g, h) == brute_force_rooted_isomorphic(g, h)
        for g, h in itertools.combinations(graphs, 2)
    )
    ok = fast == brute and agree
    verdict.record("C8 family distinctness", ok, f"{fast} classes by traversal, {brute} by brute force over 24 orders")
    assert ok
