import itertools
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snakenet.portgraph import (
    GraphError,
    PortGraph,
    bfs_oracle_path,
    bidirectional_complete,
    brute_force_rooted_isomorphic,
    diameter,
    directed_cycle,
    random_strongly_connected,
    rooted_port_isomorphic,
    tree_loop_family,
    validate,
)


def two_cycle():
    return PortGraph(2, 2, ((0, 1, 1, 1), (1, 1, 0, 1)), root=0)


def as_nx(g):
    d = nx.MultiDiGraph()
    d.add_nodes_from(range(g.node_count))
    d.add_edges_from((s, t) for s, _, t, _ in g.edges)
    return d


def test_two_cycle_is_valid():
    assert validate(two_cycle()) == []


def test_one_way_pair_is_not_strongly_connected():
    g = PortGraph(2, 2, ((0, 1, 1, 1),), root=0)
    assert any("not strongly connected" in p for p in validate(g))


def test_out_port_reuse_reported():
    g = PortGraph(3, 2, ((0, 1, 1, 1), (0, 1, 2, 1), (1, 1, 0, 1), (2, 1, 0, 2)), root=0)
    assert any("out-port reuse" in p for p in validate(g))


def test_self_loop_rejected():
    g = PortGraph(2, 2, ((0, 1, 1, 1), (1, 1, 0, 1), (0, 2, 0, 2)), root=0)
    assert any("self-loop" in p for p in validate(g))


def test_port_out_of_range_rejected():
    g = PortGraph(2, 2, ((0, 3, 1, 1), (1, 1, 0, 1)), root=0)
    assert any("outside" in p for p in validate(g))


def test_random_small():
    g = random_strongly_connected(2, 2, 0)
    assert g.node_count == 2
    assert validate(g) == []


def test_random_is_pure_in_its_arguments():
    a = random_strongly_connected(16, 3, 7)
    b = random_strongly_connected(16, 3, 7)
    assert validate(a) == []
    assert a.to_json() == b.to_json()
    assert set(random_strongly_connected(16, 3, 8).edges) != set(a.edges)


@pytest.mark.parametrize("n,delta", [(1, 2), (4, 1)])
def test_random_rejects_bad_arguments(n, delta):
    with pytest.raises(GraphError):
        random_strongly_connected(n, delta, 0)


def test_treeloop_depth_one():
    g = tree_loop_family(1, (1, 2))
    assert g.node_count == 3
    loop = [e for e in g.edges if e[0] != 0 and e[2] != 0]
    assert len(loop) == 2
    assert len(g.edges) == 4 + 2  # two tree edges each way, two loop edges
    assert validate(g) == []


def test_treeloop_depth_two_node_count():
    assert tree_loop_family(2, (1, 3, 2, 4)).node_count == 7


def test_treeloop_rejects_bad_permutation():
    with pytest.raises(GraphError):
        tree_loop_family(2, (1, 1, 2, 3))


def test_treeloop_orders_distinguished():
    a = tree_loop_family(2, (1, 2, 3, 4))
    b = tree_loop_family(2, (1, 3, 2, 4))
    assert not rooted_port_isomorphic(a, b)
    assert not brute_force_rooted_isomorphic(a, b)


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_treeloop_valid_and_diameter_bound(depth):
    rng = random.Random(depth)
    for _ in range(50 if depth < 4 else 10):
        order = list(range(1, 2**depth + 1))
        rng.shuffle(order)
        g = tree_loop_family(depth, order)
        assert validate(g) == []
        assert diameter(g) <= 2 * depth + 2**depth


def test_oracle_single_edge():
    p = bfs_oracle_path(two_cycle(), 0, 1)
    assert p.hops == ((1, 1),)
    assert len(p) == 1


def test_oracle_lowest_in_port_tie_break():
    # 0 -> 1 and 0 -> 2, both reach 3; 2 enters on in-port 1, 1 on in-port 2
    edges = (
        (0, 1, 1, 1), (0, 2, 2, 1),
        (1, 1, 3, 2), (2, 1, 3, 1),
        (3, 1, 0, 1),
    )
    g = PortGraph(4, 2, edges, root=0)
    assert validate(g) == []
    p = bfs_oracle_path(g, 0, 3)
    assert p.nodes(g) == [0, 2, 3]
    assert p.hops == ((2, 1), (1, 1))


def test_oracle_rejects_same_endpoints():
    with pytest.raises(GraphError):
        bfs_oracle_path(two_cycle(), 0, 0)


def test_oracle_length_matches_plain_bfs_sampled():
    g = random_strongly_connected(12, 3, 3)
    dist = dict(nx.all_pairs_shortest_path_length(as_nx(g)))
    rng = random.Random(0)
    for _ in range(20):
        a, b = rng.sample(range(12), 2)
        assert len(bfs_oracle_path(g, a, b)) == dist[a][b]


@pytest.mark.parametrize("seed", range(12))
def test_oracle_length_exhaustive_small(seed):
    rng = random.Random(seed)
    g = random_strongly_connected(rng.randint(2, 10), rng.randint(2, 4), seed)
    dist = dict(nx.all_pairs_shortest_path_length(as_nx(g)))
    for a, b in itertools.permutations(range(g.node_count), 2):
        p = bfs_oracle_path(g, a, b)
        assert len(p) == dist[a][b]
        assert p.nodes(g)[-1] == b
    assert diameter(g) == max(max(row.values()) for row in dist.values())


def test_isomorphic_to_itself_and_relabeled():
    g = random_strongly_connected(9, 3, 1)
    assert rooted_port_isomorphic(g, g)
    swapped = list(range(9))
    swapped[3], swapped[7] = 7, 3
    h = g.relabel(swapped)
    assert h.edges != g.edges
    assert rooted_port_isomorphic(g, h)


def test_isomorphism_respects_root():
    g = directed_cycle(3)
    moved = PortGraph(3, 2, g.edges, root=1)
    assert rooted_port_isomorphic(g, moved)  # a cycle looks the same from every node
    h = bidirectional_complete(3)
    assert not rooted_port_isomorphic(g, h)


def test_json_round_trip():
    g = random_strongly_connected(10, 4, 2)
    assert PortGraph.from_json(g.to_json()) == g


def test_dot_has_port_labels():
    dot = two_cycle().to_dot()
    assert '"o1/i1"' in dot


def test_complete_graph_shape():
    g = bidirectional_complete(3)
    assert len(g.edges) == 6
    assert validate(g) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 14), st.integers(2, 4), st.integers(0, 10**6))
def test_generated_graphs_valid_and_isomorphism_symmetric(n, delta, seed):
    g = random_strongly_connected(n, delta, seed)
    h = random_strongly_connected(n, delta, seed + 1)
    assert validate(g) == []
    assert rooted_port_isomorphic(g, g)
    assert rooted_port_isomorphic(g, h) == rooted_port_isomorphic(h, g)
