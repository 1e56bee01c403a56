from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deloc.graph_core import (
    PRESETS,
    Graph,
    GraphError,
    GroupTable,
    LiftSpec,
    ProductRule,
    adjacency_matrix,
    bouquet,
    cayley_graph,
    complete_graph,
    cycle_graph,
    cyclic_group,
    direct_product,
    disjoint_union,
    edge_orientation,
    empty_graph,
    from_adjacency,
    from_edges,
    hypercube_group,
    injectivity_radius,
    lift_from_permutations,
    path_graph,
    product_graph,
    random_lift,
    read_edge_list,
    read_group_csv,
    repeated_copies,
    star_graph,
    write_edge_list,
    write_group_csv,
)


def spectrum(g):
    return np.sort(np.linalg.eigvalsh(adjacency_matrix(g)))


multigraphs = st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=14))
)


# -------------------------------------------------------------- Graph


@given(multigraphs)
def test_involution_round_trip(spec):
    n, edges = spec
    g = from_edges(n, edges)
    e = np.arange(g.half_edge_count)
    assert np.array_equal(g.involution[g.involution], e)
    assert not np.any(g.involution == e)
    a = adjacency_matrix(g)
    assert np.array_equal(a, a.T)
    assert np.array_equal(a.sum(axis=1), g.degrees)


@given(multigraphs)
def test_adjacency_round_trip(spec):
    n, edges = spec
    a = adjacency_matrix(from_edges(n, edges))
    assert np.array_equal(adjacency_matrix(from_adjacency(a)), a)


def test_invalid_involution_rejected():
    with pytest.raises(GraphError):
        Graph(2, np.array([0, 1]), np.array([0, 1]))
    with pytest.raises(GraphError):
        Graph(3, np.array([0, 1, 2]), np.array([1, 2, 0]))
    with pytest.raises(GraphError):
        from_edges(2, [(0, 5)])


def test_loop_counts_twice():
    a = adjacency_matrix(bouquet(1))
    assert a.tolist() == [[2.0]]
    assert adjacency_matrix(bouquet(3)).tolist() == [[6.0]]


def test_empty_graph_zero_matrix():
    assert not adjacency_matrix(empty_graph(4)).any()


def test_k3_adjacency():
    assert np.array_equal(adjacency_matrix(complete_graph(3)), np.ones((3, 3)) - np.eye(3))


def test_cycle_spectra():
    assert np.allclose(spectrum(cycle_graph(3)), [-1, -1, 2])
    assert np.allclose(spectrum(cycle_graph(4)), [-2, 0, 0, 2])
    vals = spectrum(cycle_graph(6))
    _, counts = np.unique(np.round(vals, 9), return_counts=True)
    assert counts.max() == 2


def test_cycle_needs_three_vertices():
    with pytest.raises(GraphError):
        cycle_graph(2)


def test_simple_flag():
    assert complete_graph(4).is_simple
    assert not from_edges(2, [(0, 1), (0, 1)]).is_simple
    assert not bouquet(1).is_simple


def test_disjoint_union_spectrum():
    g = disjoint_union(cycle_graph(3), path_graph(2))
    assert g.n == 5
    assert np.allclose(spectrum(g), sorted([-1, -1, 2, -1, 1]))


def test_relabel_preserves_spectrum():
    g = from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])
    perm = np.array([3, 0, 4, 1, 2])
    assert np.allclose(spectrum(g), spectrum(g.relabeled(perm)))


# ------------------------------------------------------------- Cayley


def test_cyclic_cayley_is_cycle():
    for n in (5, 8, 13):
        assert np.array_equal(adjacency_matrix(cayley_graph(cyclic_group(n))), adjacency_matrix(cycle_graph(n)))


def test_klein_group_gives_k4():
    z2 = cyclic_group(2, [1])
    klein = direct_product(z2, z2).with_generators([1, 2, 3])
    assert np.array_equal(adjacency_matrix(cayley_graph(klein)), adjacency_matrix(complete_graph(4)))


def test_hypercube_regular():
    g = cayley_graph(hypercube_group(4))
    assert g.n == 16 and set(g.degrees.tolist()) == {4}


@given(st.integers(2, 12), st.lists(st.integers(1, 11), min_size=1, max_size=3))
def test_cayley_constant_row_sums(n, gens):
    gens = [x % n for x in gens if x % n]
    if not gens:
        return
    w = np.zeros(n)
    for g in gens:
        w[g] += 1.0
        w[(-g) % n] += 1.0
    a = adjacency_matrix(cayley_graph(cyclic_group(n).with_weight(w)))
    assert np.allclose(a.sum(axis=1), a.sum(axis=1)[0])


def test_weighted_cayley_entries():
    w = np.array([0.0, 0.5, 0.25, 0.25, 0.5])
    g = cayley_graph(cyclic_group(5).with_weight(w))
    a = adjacency_matrix(g)
    for i in range(5):
        for j in range(5):
            assert a[i, j] == pytest.approx(w[(j - i) % 5])


def test_identity_weight_becomes_loop():
    w = np.array([1.5, 1.0, 0.0, 1.0])
    a = adjacency_matrix(cayley_graph(cyclic_group(4).with_weight(w)))
    assert np.allclose(np.diag(a), 1.5)


def test_cayley_rejects_bad_input():
    with pytest.raises(GraphError):
        cayley_graph(cyclic_group(5).with_weight([0, 1, 0, 0, 0]))
    with pytest.raises(GraphError):
        GroupTable(np.array([[0, 1], [0, 1]]), np.zeros(2))


def test_group_csv_round_trip():
    grp = direct_product(cyclic_group(3, [1]), cyclic_group(2, [1]))
    text = write_group_csv(grp)
    back = read_group_csv(text)
    assert np.array_equal(back.mult, grp.mult) and np.allclose(back.weight, grp.weight)


# ------------------------------------------------------------ products


def test_cartesian_c3_c3():
    g = product_graph(cycle_graph(3), cycle_graph(3), "cartesian")
    assert g.n == 9 and set(g.degrees.tolist()) == {4}


def test_tensor_k2_k2_matching():
    g = product_graph(complete_graph(2), complete_graph(2), "tensor")
    assert g.edge_count == 2 and set(g.degrees.tolist()) == {1}


def test_full_rule_gives_complete():
    g = product_graph(complete_graph(2), complete_graph(2), ProductRule.from_code(255))
    assert np.array_equal(adjacency_matrix(g), adjacency_matrix(complete_graph(4)))


@settings(max_examples=30)
@given(st.integers(0, 255), st.integers(1, 4), st.integers(1, 4))
def test_product_vertex_count(code, a, b):
    g = product_graph(path_graph(a), complete_graph(b), ProductRule.from_code(code))
    assert g.n == a * b


def test_rule_codes_round_trip():
    assert all(ProductRule.from_code(c).code == c for c in range(256))
    assert len(ProductRule.PAIRS) == 8
    assert PRESETS["cartesian"].table.count(True) == 2


def test_strong_is_union_of_cartesian_and_tensor():
    g, h = cycle_graph(4), path_graph(3)
    s = adjacency_matrix(product_graph(g, h, "strong"))
    c = adjacency_matrix(product_graph(g, h, "cartesian"))
    t = adjacency_matrix(product_graph(g, h, "tensor"))
    assert np.array_equal(s, c + t)


def test_product_rejects_multigraph():
    with pytest.raises(GraphError):
        product_graph(from_edges(2, [(0, 1), (0, 1)]), path_graph(2), "cartesian")


# --------------------------------------------------------------- lifts


def test_lift_of_edge_is_matching():
    g, _ = random_lift(path_graph(2), 7, seed=3)
    assert g.n == 14 and set(g.degrees.tolist()) == {1}


def test_lift_of_triangle_is_cycles():
    g, _ = random_lift(cycle_graph(3), 10, seed=1)
    assert set(g.degrees.tolist()) == {2}
    assert g.edge_count == 30


@settings(max_examples=25, deadline=None)
@given(multigraphs, st.integers(1, 6), st.integers(0, 10_000))
def test_lift_covering_property(spec, n, seed):
    nb, edges = spec
    base = from_edges(nb, edges)
    g, ls = random_lift(base, n, seed)
    proj = ls.projection()
    a = adjacency_matrix(g)
    ab = adjacency_matrix(base)
    # each lifted vertex sees exactly the base adjacency counts, fibre by fibre
    fibre_counts = np.zeros((g.n, nb))
    np.add.at(fibre_counts.T, proj, a.T)
    assert np.array_equal(fibre_counts, ab[proj])
    assert np.array_equal(g.degrees, base.degrees[proj])


def test_lift_spec_inverse_property_enforced():
    base = path_graph(2)
    perms = np.array([[1, 2, 0], [1, 2, 0]])
    with pytest.raises(GraphError):
        LiftSpec(base, 3, perms)


def test_lift_reproducible_and_oriented():
    base = complete_graph(4)
    g1, s1 = random_lift(base, 20, seed=11)
    g2, s2 = random_lift(base, 20, seed=11)
    assert np.array_equal(s1.permutations, s2.permutations)
    order = edge_orientation(base)
    assert len(order) == base.edge_count
    keys = [(min(base.origin[e], base.terminus[e]), max(base.origin[e], base.terminus[e])) for e in order]
    assert keys == sorted(keys)


def test_trivial_lift_is_copies():
    g = repeated_copies(cycle_graph(5), 3)
    assert np.allclose(spectrum(g), np.sort(np.repeat(spectrum(cycle_graph(5)), 3)))


def test_loop_lift_preserves_degree():
    g, _ = random_lift(bouquet(2), 9, seed=4)
    assert set(g.degrees.tolist()) == {4}


def test_explicit_lift_indices():
    base = path_graph(2)  # half-edges 0: 0->1, 1: 1->0
    sigma = np.array([2, 0, 1])
    spec = LiftSpec(base, 3, np.array([sigma, np.argsort(sigma)]))
    g = lift_from_permutations(spec)
    a = adjacency_matrix(g)
    for i in range(3):
        assert a[spec.vertex(0, i), spec.vertex(1, sigma[i])] == 1


# ---------------------------------------------------- injectivity radius


def test_injectivity_radius_examples():
    assert all(injectivity_radius(complete_graph(4), x) == 1 for x in range(4))
    assert all(injectivity_radius(cycle_graph(6), x) == 2 for x in range(6))
    assert injectivity_radius(cycle_graph(5), 0) == 2
    assert injectivity_radius(cycle_graph(3), 0) == 1
    tree = star_graph(4)
    assert injectivity_radius(tree, 0) == tree.n
    assert injectivity_radius(path_graph(6), 2) == 6


def test_injectivity_radius_loops_and_multiedges():
    assert injectivity_radius(bouquet(1), 0) == 0
    assert injectivity_radius(from_edges(2, [(0, 1), (0, 1)]), 0) == 0


def test_injectivity_radius_cap():
    assert injectivity_radius(cycle_graph(40), 0, cap=5) == 5


# ------------------------------------------------------------------- IO


def test_edge_list_round_trip(tmp_path):
    g = from_edges(5, [(0, 1), (1, 2), (2, 2)], weights=[1.0, 2.5, 0.5])
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    back = read_edge_list(path)
    assert back.n == 5
    assert np.allclose(adjacency_matrix(back), adjacency_matrix(g))


def test_edge_list_comments_and_errors():
    g = read_edge_list(io.StringIO("# a triangle\n0 1\n\n1 2  # edge\n2 0\n"))
    assert np.allclose(spectrum(g), [-1, -1, 2])
    with pytest.raises(GraphError):
        read_edge_list("0 1 2 3\n")
    with pytest.raises(GraphError):
        read_edge_list("0 1 1.0\n1 2\n")
