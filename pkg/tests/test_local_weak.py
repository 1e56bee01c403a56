from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deloc.graph_core import (
    bouquet,
    complete_graph,
    cycle_graph,
    from_edges,
    path_graph,
    random_lift,
    repeated_copies,
    star_graph,
)
from deloc.local_weak import (
    BallDistribution,
    CodeSizeError,
    ball_distribution,
    bst_profile,
    canonical_code,
    cover_ball_codes,
    cover_mismatch_fraction,
    lift_depth,
    lift_limit_distribution,
    rooted_ball,
    tree_node_code,
    tv_distance,
)

small_multigraphs = st.integers(1, 7).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=10),
        st.integers(0, n - 1),
    )
)


def as_nx(n, edges, root):
    g = nx.MultiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    nx.set_node_attributes(g, {v: v == root for v in g}, "root")
    return g


def rooted_isomorphic(a, b):
    return nx.is_isomorphic(a, b, node_match=lambda x, y: x["root"] == y["root"])


@settings(max_examples=150, deadline=None)
@given(small_multigraphs, st.randoms(use_true_random=False))
def test_code_invariant_under_relabeling(spec, rnd):
    n, edges, root = spec
    perm = list(range(n))
    rnd.shuffle(perm)
    a = canonical_code(from_edges(n, edges), root)
    b = canonical_code(from_edges(n, [(perm[u], perm[v]) for u, v in edges]), perm[root])
    assert a == b


@settings(max_examples=150, deadline=None)
@given(small_multigraphs, small_multigraphs)
def test_code_equality_iff_isomorphic(s1, s2):
    n1, e1, r1 = s1
    n2, e2, r2 = s2
    same = canonical_code(from_edges(n1, e1), r1) == canonical_code(from_edges(n2, e2), r2)
    assert same == rooted_isomorphic(as_nx(n1, e1, r1), as_nx(n2, e2, r2))


def test_codes_separate_classic_pairs():
    # two 3-regular graphs on 6 vertices: prism and K_{3,3}
    prism = from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)])
    k33 = from_edges(6, [(i, j) for i in range(3) for j in range(3, 6)])
    assert canonical_code(prism, 0) != canonical_code(k33, 0)
    # a loop and a double edge differ from a single edge
    assert canonical_code(bouquet(1), 0) != canonical_code(empty_like(1), 0)
    assert canonical_code(from_edges(2, [(0, 1), (0, 1)]), 0) != canonical_code(path_graph(2), 0)


def empty_like(n):
    return from_edges(n, [])


def test_root_matters():
    g = path_graph(3)
    assert canonical_code(g, 0) != canonical_code(g, 1)
    assert canonical_code(g, 0) == canonical_code(g, 2)


def test_tree_codes_marked():
    assert canonical_code(star_graph(5), 0).is_tree
    assert not canonical_code(cycle_graph(4), 0).is_tree


def test_tree_node_code_hashes_long_strings():
    short = tree_node_code(["()"] * 3)
    assert short == "(()()())"
    long = tree_node_code(["()"] * 100)
    assert long.startswith("#") and len(long) < 40


def test_code_size_cap():
    with pytest.raises(CodeSizeError):
        canonical_code(cycle_graph(20), 0, v_max=10)


def test_rooted_ball_keeps_cross_edges():
    b = rooted_ball(cycle_graph(5), 0, 2)
    assert b.size == 5 and b.graph.edge_count == 5 and not b.is_tree()
    b1 = rooted_ball(cycle_graph(6), 0, 2)
    assert b1.size == 5 and b1.is_tree()
    assert b1.distance.tolist() == [0, 1, 1, 2, 2]
    with pytest.raises(ValueError):
        rooted_ball(cycle_graph(5), 0, -1)


def test_distribution_of_transitive_graph_is_point_mass():
    dist = ball_distribution(cycle_graph(9), 3)
    assert len(dist) == 1 and dist.total() == 1.0


def test_tv_basic():
    p = ball_distribution(path_graph(4), 1)
    q = ball_distribution(path_graph(4), 1)
    assert tv_distance(p, q) == 0.0
    c = ball_distribution(cycle_graph(4), 1)
    assert tv_distance(p, c) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        tv_distance(p, ball_distribution(path_graph(4), 2))


def test_tv_depth_zero_exactly_zero():
    g, _ = random_lift(complete_graph(4), 50, seed=0)
    assert tv_distance(ball_distribution(g, 0), lift_limit_distribution(complete_graph(4), 0)) == 0.0


def test_distribution_json_round_trip():
    d = ball_distribution(star_graph(3), 1)
    back = BallDistribution.from_json(d.to_json())
    assert back.probs == d.probs and back.depth == 1


def test_cover_ball_is_regular_tree():
    # depth-2 ball of the 3-regular tree has 1 + 3 + 6 vertices
    codes = cover_ball_codes(complete_graph(4), 2)
    g = from_edges(10, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 8), (3, 9)])
    assert all(c == canonical_code(g, 0) for c in codes)


def test_cover_of_loop_base():
    # bouquet with one loop covers the bi-infinite path
    assert cover_ball_codes(bouquet(1), 2)[0] == canonical_code(path_graph(5), 2)


def test_large_lift_matches_cover():
    base = complete_graph(4)
    g, spec = random_lift(base, 400, seed=1)
    frac = cover_mismatch_fraction(g, spec, 1)
    tv = tv_distance(ball_distribution(g, 1), lift_limit_distribution(base, 1))
    assert tv == pytest.approx(frac)
    assert tv < 0.05


def test_trivial_lift_far_from_cover():
    g = repeated_copies(complete_graph(4), 5)
    assert tv_distance(ball_distribution(g, 1), lift_limit_distribution(complete_graph(4), 1)) == 1.0


def test_bst_profile():
    # C_10 has injectivity radius 4 everywhere
    assert bst_profile(cycle_graph(10), 4) == 0.0
    assert bst_profile(cycle_graph(10), 5) == 1.0
    assert bst_profile(complete_graph(4), 2) == 1.0


def test_lift_depth():
    assert lift_depth(100 * 4, 3) == 1
    assert lift_depth(10**6, 3) == 2
    with pytest.raises(ValueError):
        lift_depth(100, 2)
