"""Finite graphs in the half-edge representation.

A graph is the quadruple (V, half-edges, involution, origin). Every edge class
is a pair {e, iota(e)}; loops are edge classes whose two half-edges share the
same origin, so a loop adds 2 to the adjacency diagonal.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

EQUAL, ADJACENT, OTHER = 0, 1, 2
_RELATION_NAMES = {"equal": EQUAL, "adjacent": ADJACENT, "other": OTHER}


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Half-edge multigraph.

    Half-edge ``e`` starts at ``origin[e]`` and ends at ``origin[involution[e]]``.
    ``weights`` (optional) holds one real per half-edge, equal on both halves
    of an edge class.
    """

    vertex_count: int
    origin: np.ndarray
    involution: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.int64)
        inv = np.asarray(self.involution, dtype=np.int64)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "involution", inv)
        origin.setflags(write=False)
        inv.setflags(write=False)
        if self.vertex_count < 0:
            raise GraphError("vertex_count must be non-negative")
        if origin.shape != inv.shape or origin.ndim != 1:
            raise GraphError("origin and involution must be 1-d arrays of equal length")
        m = origin.size
        if m:
            if origin.min() < 0 or origin.max() >= self.vertex_count:
                raise GraphError("origin maps a half-edge outside the vertex set")
            if inv.min() < 0 or inv.max() >= m:
                raise GraphError("involution maps outside the half-edge set")
            if np.any(inv[inv] != np.arange(m)):
                raise GraphError("involution is not an involution")
            if np.any(inv == np.arange(m)):
                raise GraphError("involution has a fixed point")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != origin.shape:
                raise GraphError("weights must have one entry per half-edge")
            if not np.allclose(w, w[inv]):
                raise GraphError("weights differ on the two halves of an edge")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.vertex_count

    @property
    def half_edge_count(self) -> int:
        return int(self.origin.size)

    @property
    def edge_count(self) -> int:
        return self.half_edge_count // 2

    @cached_property
    def terminus(self) -> np.ndarray:
        return self.origin[self.involution]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.origin, minlength=self.vertex_count)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.vertex_count else 0

    @cached_property
    def out_half_edges(self) -> list[np.ndarray]:
        """Half-edges grouped by origin, each group sorted by id."""
        order = np.argsort(self.origin, kind="stable")
        splits = np.cumsum(self.degrees)[:-1]
        return np.split(order, splits) if self.vertex_count else []

    @cached_property
    def neighbor_lists(self) -> list[list[int]]:
        """Terminus of every half-edge leaving each vertex (with repetitions)."""
        t = self.terminus
        return [t[hs].tolist() for hs in self.out_half_edges]

    def edges(self) -> list[tuple[int, int]]:
        """One (origin, terminus) pair per edge class, from its lower half-edge."""
        e = np.flatnonzero(np.arange(self.half_edge_count) < self.involution)
        return list(zip(self.origin[e].tolist(), self.terminus[e].tolist()))

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    @cached_property
    def is_simple(self) -> bool:
        if np.any(self.origin == self.terminus):
            return False
        pairs = {(min(u, v), max(u, v)) for u, v in self.edges()}
        return len(pairs) == self.edge_count

    def relabeled(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex v renamed perm[v]."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph(self.vertex_count, perm[self.origin], self.involution, self.weights)


def from_edges(n: int, edges: Iterable[tuple[int, int]], weights: Iterable[float] | None = None) -> Graph:
    """Build a graph with half-edges (2k, 2k+1) for the k-th edge (u, v)."""
    edges = [(int(u), int(v)) for u, v in edges]
    origin = np.empty(2 * len(edges), dtype=np.int64)
    for k, (u, v) in enumerate(edges):
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        origin[2 * k] = u
        origin[2 * k + 1] = v
    inv = np.arange(origin.size) ^ 1
    w = None
    if weights is not None:
        w = np.repeat(np.asarray(list(weights), dtype=float), 2)
        if w.size != origin.size:
            raise GraphError("need one weight per edge")
    return Graph(n, origin, inv, w)


def empty_graph(n: int) -> Graph:
    return from_edges(n, [])


def path_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError("path needs at least one vertex")
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"cycle graph needs n >= 3, got {n}")
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError("complete graph needs at least one vertex")
    return from_edges(n, itertools.combinations(range(n), 2))


def star_graph(leaves: int) -> Graph:
    return from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def bouquet(loops: int) -> Graph:
    """Single vertex carrying ``loops`` loops."""
    return from_edges(1, [(0, 0)] * loops)


def disjoint_union(*graphs: Graph) -> Graph:
    origins, invs, ws = [], [], []
    v_off = e_off = 0
    weighted = any(g.is_weighted for g in graphs)
    for g in graphs:
        origins.append(g.origin + v_off)
        invs.append(g.involution + e_off)
        if weighted:
            ws.append(g.weights if g.is_weighted else np.ones(g.half_edge_count))
        v_off += g.vertex_count
        e_off += g.half_edge_count
    cat = lambda xs: np.concatenate(xs) if xs else np.empty(0, dtype=np.int64)
    return Graph(v_off, cat(origins), cat(invs), np.concatenate(ws) if weighted else None)


def adjacency_matrix(g: Graph) -> np.ndarray:
    """Dense symmetric adjacency; a loop contributes 2 (one per half-edge)."""
    a = np.zeros((g.vertex_count, g.vertex_count))
    w = g.weights if g.is_weighted else 1.0
    np.add.at(a, (g.origin, g.terminus), w)
    return a


def from_adjacency(a: np.ndarray) -> Graph:
    """Inverse of :func:`adjacency_matrix` for non-negative integer matrices."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
        raise GraphError("adjacency must be a square symmetric matrix")
    if np.any(a < 0) or np.any(a != np.round(a)):
        raise GraphError("adjacency entries must be non-negative integers")
    if np.any(np.diag(a) % 2):
        raise GraphError("diagonal entries must be even (each loop counts twice)")
    edges = []
    n = a.shape[0]
    for i in range(n):
        edges += [(i, i)] * int(a[i, i] // 2)
        for j in range(i + 1, n):
            edges += [(i, j)] * int(a[i, j])
    return from_edges(n, edges)


# ---------------------------------------------------------------- groups


@dataclass(frozen=True, eq=False)
class GroupTable:
    """Finite group given by its multiplication table, plus a weight alpha.

    ``mult[i, j]`` is the index of g_i * g_j.
    """

    mult: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        mult = np.asarray(self.mult, dtype=np.int64)
        weight = np.asarray(self.weight, dtype=float)
        object.__setattr__(self, "mult", mult)
        object.__setattr__(self, "weight", weight)
        m = mult.shape[0]
        if mult.shape != (m, m) or m == 0:
            raise GraphError("multiplication table must be a non-empty square")
        full = np.arange(m)
        if not all(np.array_equal(np.sort(r), full) for r in mult) or not all(
            np.array_equal(np.sort(c), full) for c in mult.T
        ):
            raise GraphError("multiplication table is not a Latin square")
        if weight.shape != (m,):
            raise GraphError("need one weight per group element")

    @property
    def order(self) -> int:
        return self.mult.shape[0]

    @cached_property
    def identity(self) -> int:
        ids = [i for i in range(self.order) if np.array_equal(self.mult[i], np.arange(self.order))]
        if len(ids) != 1:
            raise GraphError("table has no two-sided identity")
        return ids[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        e = self.identity
        return np.array([int(np.flatnonzero(row == e)[0]) for row in self.mult])

    def with_weight(self, weight) -> "GroupTable":
        return GroupTable(self.mult, weight)

    def with_generators(self, gens: Iterable[int]) -> "GroupTable":
        w = np.zeros(self.order)
        w[list(gens)] = 1.0
        return GroupTable(self.mult, w)


def cyclic_group(n: int, gens: Iterable[int] | None = None) -> GroupTable:
    mult = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    gens = [1, n - 1] if gens is None else list(gens)
    w = np.zeros(n)
    w[gens] = 1.0
    return GroupTable(mult, w)


def direct_product(g: GroupTable, h: GroupTable) -> GroupTable:
    """G x H with element (a, b) at index a * |H| + b; weight alpha(a,b) = alpha_G(a) 1[b=e] + 1[a=e] alpha_H(b)."""
    mg, mh = g.order, h.order
    a = np.arange(mg * mh)
    ga, hb = a // mh, a % mh
    mult = g.mult[ga[:, None], ga[None, :]] * mh + h.mult[hb[:, None], hb[None, :]]
    w = g.weight[ga] * (hb == h.identity) + (ga == g.identity) * h.weight[hb]
    return GroupTable(mult, w)


def hypercube_group(k: int) -> GroupTable:
    """(Z_2)^k with the k standard generators (the hypercube Cayley graph)."""
    z2 = cyclic_group(2, gens=[1])
    g = z2
    for _ in range(k - 1):
        g = direct_product(g, z2)
    return g


def cayley_graph(group: GroupTable, atol: float = 1e-12) -> Graph:
    """Weighted graph with A[i, j] = alpha(g_j g_i^{-1}).

    Non-zero alpha at the identity becomes a loop of weight alpha(e)/2 at
    every vertex (a loop contributes twice to the diagonal).
    """
    inv = group.inverse
    alpha = group.weight
    if not np.allclose(alpha, alpha[inv], atol=atol):
        raise GraphError("weight is not symmetric under inversion")
    m = group.order
    idx = group.mult[np.arange(m)[None, :], inv[:, None]]  # idx[i, j] = g_j g_i^{-1}
    a = alpha[idx]
    edges, ws = [], []
    for i in range(m):
        if a[i, i] != 0:
            edges.append((i, i))
            ws.append(a[i, i] / 2)
        for j in range(i + 1, m):
            if a[i, j] != 0:
                edges.append((i, j))
                ws.append(a[i, j])
    unweighted = all(w == 1.0 for w in ws) and a.diagonal().max(initial=0) == 0
    return from_edges(m, edges, None if unweighted else ws)


# -------------------------------------------------------------- products


@dataclass(frozen=True)
class ProductRule:
    """Which (relation in G, relation in H) pairs make (g,h) ~ (g',h').

    ``fires`` is a frozenset of pairs drawn from {equal, adjacent, other}^2
    minus (equal, equal); each of the 256 subsets is one product type.
    """

    fires: frozenset

    def __post_init__(self):
        pairs = frozenset((int(a), int(b)) for a, b in self.fires)
        bad = [p for p in pairs if p == (EQUAL, EQUAL) or not set(p) <= {EQUAL, ADJACENT, OTHER}]
        if bad:
            raise GraphError(f"invalid relation pairs {bad}")
        object.__setattr__(self, "fires", pairs)

    PAIRS = tuple(p for p in itertools.product((EQUAL, ADJACENT, OTHER), repeat=2) if p != (EQUAL, EQUAL))

    @property
    def table(self) -> tuple[bool, ...]:
        return tuple(p in self.fires for p in self.PAIRS)

    @property
    def code(self) -> int:
        return sum(1 << k for k, on in enumerate(self.table) if on)

    @classmethod
    def from_code(cls, code: int) -> "ProductRule":
        if not 0 <= code < 256:
            raise GraphError("product code must lie in [0, 256)")
        return cls(frozenset(p for k, p in enumerate(cls.PAIRS) if code >> k & 1))

    @classmethod
    def named(cls, name: str) -> "ProductRule":
        try:
            return PRESETS[name]
        except KeyError:
            raise GraphError(f"unknown product {name!r}; choose from {sorted(PRESETS)}") from None


_cart = {(ADJACENT, EQUAL), (EQUAL, ADJACENT)}
PRESETS = {
    "cartesian": ProductRule(frozenset(_cart)),
    "tensor": ProductRule(frozenset({(ADJACENT, ADJACENT)})),
    "strong": ProductRule(frozenset(_cart | {(ADJACENT, ADJACENT)})),
    "lexicographic": ProductRule(
        frozenset({(ADJACENT, EQUAL), (ADJACENT, ADJACENT), (ADJACENT, OTHER), (EQUAL, ADJACENT)})
    ),
}


def _relation_matrix(g: Graph) -> np.ndarray:
    r = np.full((g.n, g.n), OTHER, dtype=np.int64)
    r[adjacency_matrix(g) > 0] = ADJACENT
    np.fill_diagonal(r, EQUAL)
    return r


def product_graph(g: Graph, h: Graph, rule: ProductRule | str) -> Graph:
    """Product on V(G) x V(H); vertex (a, b) has index a * |V(H)| + b."""
    if isinstance(rule, str):
        rule = ProductRule.named(rule)
    for name, x in (("first", g), ("second", h)):
        if not x.is_simple or x.is_weighted:
            raise GraphError(f"{name} factor must be a simple unweighted graph")
    lookup = np.zeros(9, dtype=bool)
    for a, b in rule.fires:
        lookup[3 * a + b] = True
    rg, rh = _relation_matrix(g), _relation_matrix(h)
    rel = 3 * rg[:, None, :, None] + rh[None, :, None, :]
    n = g.n * h.n
    adj = lookup[rel].reshape(n, n)
    np.fill_diagonal(adj, False)
    iu, ju = np.nonzero(np.triu(adj, 1))
    return from_edges(n, zip(iu.tolist(), ju.tolist()))


# ----------------------------------------------------------------- lifts


@dataclass(frozen=True, eq=False)
class LiftSpec:
    """Permutation sigma_e of [n] for every base half-edge, with sigma_{iota(e)} = sigma_e^{-1}."""

    base: Graph
    n: int
    permutations: np.ndarray  # shape (half_edge_count, n)

    def __post_init__(self):
        p = np.asarray(self.permutations, dtype=np.int64)
        object.__setattr__(self, "permutations", p)
        if p.shape != (self.base.half_edge_count, self.n):
            raise GraphError("need one permutation of [n] per base half-edge")
        ident = np.arange(self.n)
        for e in range(p.shape[0]):
            if not np.array_equal(p[self.base.involution[e]][p[e]], ident):
                raise GraphError(f"sigma of half-edge {e} and of its reverse are not mutually inverse")

    def vertex(self, v: int, i: int) -> int:
        return v * self.n + i

    def projection(self) -> np.ndarray:
        """Covering map V x [n] -> V as an array over lifted vertices."""
        return np.repeat(np.arange(self.base.n), self.n)


def edge_orientation(base: Graph) -> list[int]:
    """Canonical oriented half-edge per edge class, ordered by (min vertex, max vertex, edge index)."""
    reps = []
    for e in range(base.half_edge_count):
        f = int(base.involution[e])
        if e > f:
            continue
        u, v = int(base.origin[e]), int(base.origin[f])
        lead = e if u <= v else f
        reps.append((min(u, v), max(u, v), e, lead))
    reps.sort()
    return [r[3] for r in reps]


def lift_from_permutations(spec: LiftSpec) -> Graph:
    base, n = spec.base, spec.n
    m = base.half_edge_count
    e_idx = np.repeat(np.arange(m), n)
    i_idx = np.tile(np.arange(n), m)
    origin = base.origin[e_idx] * n + i_idx
    target_e = base.involution[e_idx]
    target_i = spec.permutations[e_idx, i_idx]
    inv = target_e * n + target_i
    w = None if base.weights is None else np.repeat(base.weights, n)
    return Graph(base.n * n, origin, inv, w)


def random_lift(base: Graph, n: int, seed=None) -> tuple[Graph, LiftSpec]:
    """Random labeled n-lift: one uniform permutation per oriented base edge.

    Lifted vertex (v, i) has index v * n + i; half-edge (e, i) has index e * n + i.
    """
    if n < 1:
        raise GraphError("lift order n must be >= 1")
    rng = np.random.default_rng(seed)
    perms = np.empty((base.half_edge_count, n), dtype=np.int64)
    for e in edge_orientation(base):
        sigma = rng.permutation(n)
        perms[e] = sigma
        perms[base.involution[e]] = np.argsort(sigma)
    spec = LiftSpec(base, n, perms)
    return lift_from_permutations(spec), spec


def repeated_copies(base: Graph, n: int) -> Graph:
    """The trivial n-lift: n disjoint copies of the base."""
    perms = np.tile(np.arange(n), (base.half_edge_count, 1))
    return lift_from_permutations(LiftSpec(base, n, perms))


# ---------------------------------------------------- injectivity radius


def injectivity_radius(g: Graph, x: int, cap: int | None = None) -> int:
    """Largest rho such that the ball B(x, rho) is a tree.

    Balls are metric (edges are unit segments), so an edge joining two
    vertices at distances a and b closes a cycle once rho > min(a, b).
    Returns ``g.vertex_count`` when the component of x is a tree, and stops
    early at ``cap`` if given.
    """
    if not 0 <= x < g.n:
        raise GraphError(f"vertex {x} outside [0, {g.n})")
    limit = g.n if cap is None else min(cap, g.n)
    inv, term = g.involution, g.terminus
    outs = g.out_half_edges
    depth = {x: 0}
    parent_rev = {x: -1}
    frontier = [x]
    best = limit
    a = 0
    while frontier and a < best:
        nxt = []
        for u in frontier:
            skip = parent_rev[u]
            for e in outs[u]:
                if e == skip:
                    continue
                w = int(term[e])
                dw = depth.get(w)
                if dw is None:
                    depth[w] = a + 1
                    parent_rev[w] = int(inv[e])
                    nxt.append(w)
                else:
                    best = min(best, a, dw)
        frontier = nxt
        a += 1
    return best


# ---------------------------------------------------------------- file IO


def read_edge_list(source, n: int | None = None) -> Graph:
    """Parse ``u v [w]`` lines (0-indexed); '#' comments and blank lines ignored.

    A ``# n=K`` comment fixes the vertex count (keeps isolated vertices).
    """
    text = _read_text(source)
    edges, weights = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        head = raw.strip()
        if n is None and head.startswith("# n="):
            n = int(head[4:])
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v [w]', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
        weights.append(float(parts[2]) if len(parts) == 3 else None)
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    has_w = [w is not None for w in weights]
    if any(has_w) and not all(has_w):
        raise GraphError("either every edge carries a weight or none does")
    return from_edges(n, edges, weights if any(has_w) else None)


def write_edge_list(g: Graph, dest=None) -> str:
    buf = io.StringIO()
    buf.write(f"# n={g.n}\n")
    lower = np.flatnonzero(np.arange(g.half_edge_count) < g.involution)
    for e in lower:
        u, v = int(g.origin[e]), int(g.terminus[e])
        if g.is_weighted:
            buf.write(f"{u} {v} {float(g.weights[e])!r}\n")
        else:
            buf.write(f"{u} {v}\n")
    out = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(out)
    return out


def read_group_csv(source) -> GroupTable:
    """First line: order m; then m rows of m indices; optional final weight row."""
    rows = [
        [c.strip() for c in line.split(",")]
        for line in _read_text(source).splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not rows:
        raise GraphError("empty group table")
    m = int(rows[0][0])
    if len(rows) < m + 1:
        raise GraphError(f"expected {m} table rows, found {len(rows) - 1}")
    mult = np.array([[int(c) for c in r] for r in rows[1 : m + 1]])
    if len(rows) > m + 1:
        weight = np.array([float(c) for c in rows[m + 1]])
    else:
        weight = np.zeros(m)
    return GroupTable(mult, weight)


def write_group_csv(group: GroupTable, dest=None) -> str:
    lines = [str(group.order)]
    lines += [",".join(map(str, r)) for r in group.mult.tolist()]
    lines.append(",".join(repr(float(w)) for w in group.weight))
    out = "\n".join(lines) + "\n"
    if dest is not None:
        Path(dest).write_text(out)
    return out


def _read_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str) and "\n" not in source and Path(source).exists():
        return Path(source).read_text()
    if hasattr(source, "read"):
        return source.read()
    return str(source)
