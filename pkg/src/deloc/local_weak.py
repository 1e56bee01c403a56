"""Rooted balls, canonical codes and neighborhood distributions.

A ball keeps every vertex within distance h of the root and every edge
(including loops and parallel edges) whose endpoints both lie in it, so two
depth-h vertices stay joined if they are joined in the source graph.

Canonical codes: hanging trees are folded into vertex labels with AHU
strings; whatever remains (the part carrying cycles, plus the path to the
root) is labeled by individualization-refinement with automorphism pruning.
Edge weights are ignored.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from .graph_core import Graph, GraphError, LiftSpec, injectivity_radius

V_MAX = 5000
_HASH_ABOVE = 96


class CodeSizeError(ValueError):
    pass


def _digest(text: str) -> str:
    return hashlib.blake2b(text.encode(), digest_size=16).hexdigest()


def tree_node_code(child_codes) -> str:
    """AHU string of a node from its children's strings; long strings are hashed."""
    s = "(" + "".join(sorted(child_codes)) + ")"
    return s if len(s) <= _HASH_ABOVE else "#" + _digest(s) + ";"


# ------------------------------------------------------------------ balls


@dataclass(frozen=True, eq=False)
class RootedBall:
    graph: Graph
    root: int
    depth: int
    vertices: np.ndarray  # original ids, BFS order; vertices[root] is the centre
    distance: np.ndarray

    @property
    def size(self) -> int:
        return self.graph.n

    def is_tree(self) -> bool:
        return self.graph.edge_count == self.graph.n - 1


def rooted_ball(g: Graph, x: int, h: int) -> RootedBall:
    if h < 0:
        raise ValueError("depth must be >= 0")
    if not 0 <= x < g.n:
        raise GraphError(f"vertex {x} outside [0, {g.n})")
    term, outs = g.terminus, g.out_half_edges
    dist = {x: 0}
    order = [x]
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if dist[u] == h:
            continue
        for w in term[outs[u]].tolist():
            if w not in dist:
                dist[w] = dist[u] + 1
                order.append(w)
                queue.append(w)
    index = {v: i for i, v in enumerate(order)}
    keep = [e for v in order for e in outs[v].tolist() if int(term[e]) in index]
    pos = {e: i for i, e in enumerate(keep)}
    origin = [index[int(g.origin[e])] for e in keep]
    inv = [pos[int(g.involution[e])] for e in keep]
    w = None if g.weights is None else g.weights[keep]
    sub = Graph(len(order), np.array(origin, dtype=np.int64), np.array(inv, dtype=np.int64), w)
    return RootedBall(sub, 0, h, np.array(order), np.array([dist[v] for v in order]))


# ---------------------------------------------------------- canonical codes


@dataclass(frozen=True)
class CanonicalCode:
    text: str

    @property
    def digest(self) -> str:
        return _digest(self.text)

    @property
    def is_tree(self) -> bool:
        return self.text.startswith("T")


def _strip_trees(n: int, nbrs: list[Counter], root: int):
    """Remove non-root leaves repeatedly; returns (alive set, hanging codes per vertex)."""
    deg = [sum(c.values()) for c in nbrs]
    hanging: list[list[str]] = [[] for _ in range(n)]
    alive = [True] * n
    leaves = deque(v for v in range(n) if deg[v] == 1 and v != root)
    while leaves:
        v = leaves.popleft()
        if not alive[v] or deg[v] != 1:
            continue
        alive[v] = False
        (u,) = [w for w in nbrs[v] if alive[w]]
        hanging[u].append(tree_node_code(hanging[v]))
        deg[u] -= 1
        deg[v] = 0
        if deg[u] == 1 and u != root:
            leaves.append(u)
    return alive, hanging


def _refine(colors: list[int], adj: list[list[tuple[int, int]]]) -> list[int]:
    """Equitable refinement: colors ranked by (color, sorted neighbor-color multiset)."""
    k = len(set(colors))
    while True:
        sig = [(colors[v], tuple(sorted((colors[w], m) for w, m in adj[v]))) for v in range(len(colors))]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [ranks[s] for s in sig]
        if len(ranks) == k:
            return new
        colors, k = new, len(ranks)


def _individualize(colors: list[int], v: int) -> list[int]:
    keyed = [(2 * c + (0 if u == v else 1)) for u, c in enumerate(colors)]
    ranks = {s: i for i, s in enumerate(sorted(set(keyed)))}
    return [ranks[s] for s in keyed]


def _target_cell(colors: list[int]) -> list[int]:
    count = Counter(colors)
    cell = min((c for c, m in count.items() if m > 1), default=None)
    return [] if cell is None else [v for v, c in enumerate(colors) if c == cell]


def _orbit_reps(cell: list[int], autos: list[list[int]], fixed: tuple[int, ...]) -> list[int]:
    """One vertex per orbit of the group generated by automorphisms fixing ``fixed``."""
    parent = {v: v for v in cell}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a in autos:
        if all(a[f] == f for f in fixed):
            for v in cell:
                w = a[v]
                if w in parent:
                    rv, rw = find(v), find(w)
                    if rv != rw:
                        parent[max(rv, rw)] = min(rv, rw)
    return sorted({find(v) for v in cell})


def _canonical_core(labels: list[str], adj: list[list[tuple[int, int]]], root: int) -> str:
    n = len(labels)
    init_keys = [(0 if v == root else 1, labels[v]) for v in range(n)]
    ranks = {s: i for i, s in enumerate(sorted(set(init_keys)))}
    colors = _refine([ranks[s] for s in init_keys], adj)

    best: list = [None, None]  # certificate, labeling
    autos: list[list[int]] = []

    def certificate(lab: list[int]):
        inv = [0] * n
        for v, p in enumerate(lab):
            inv[p] = v
        vertex_part = tuple(labels[inv[p]] for p in range(n))
        edges = tuple(sorted((lab[v], lab[w], m) for v in range(n) for w, m in adj[v] if lab[v] <= lab[w]))
        return vertex_part, edges

    def search(cols: list[int], path: tuple[int, ...]):
        cell = _target_cell(cols)
        if not cell:
            cert = certificate(cols)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, cols
            elif cert == best[0]:
                # two leaves with equal certificates differ by an automorphism
                inv_best = [0] * n
                for v, p in enumerate(best[1]):
                    inv_best[p] = v
                autos.append([inv_best[cols[v]] for v in range(n)])
            return
        for v in cell:
            # skip v when an automorphism fixing the path maps it to an explored vertex
            if v != cell[0] and v not in _orbit_reps(cell, autos, path):
                continue
            search(_refine(_individualize(cols, v), adj), path + (v,))

    search(colors, ())
    vertex_part, edges = best[0]
    body = ",".join(vertex_part) + "|" + ";".join(f"{a}-{b}x{m}" for a, b, m in edges)
    return f"G{n}:{body}"


def canonical_code(b: RootedBall | Graph, root: int | None = None, v_max: int = V_MAX) -> CanonicalCode:
    """Isomorphism-complete code of a rooted graph (ball or plain graph + root)."""
    if isinstance(b, RootedBall):
        g, root = b.graph, b.root
    else:
        g, root = b, (0 if root is None else root)
    if g.n > v_max:
        raise CodeSizeError(f"ball has {g.n} vertices, above the cap {v_max}")
    n = g.n
    nbrs = [Counter(row) for row in g.neighbor_lists]
    alive, hanging = _strip_trees(n, nbrs, root)
    core = [v for v in range(n) if alive[v]]
    if len(core) == 1 and root not in nbrs[root]:
        return CanonicalCode("T" + tree_node_code(hanging[root]))
    index = {v: i for i, v in enumerate(core)}
    labels = ["".join(sorted(hanging[v])) for v in core]
    adj = []
    for v in core:
        # loops appear twice in a neighbor list (one per half-edge)
        adj.append(sorted((index[w], m) for w, m in nbrs[v].items() if alive[w]))
    return CanonicalCode(_canonical_core(labels, adj, index[root]))


# ----------------------------------------------------------- distributions


@dataclass
class BallDistribution:
    depth: int
    probs: dict[str, float]
    witnesses: dict[str, str] = field(default_factory=dict, repr=False)

    def total(self) -> float:
        return math.fsum(self.probs.values())

    def __len__(self) -> int:
        return len(self.probs)

    def to_json(self) -> str:
        return json.dumps({"depth": self.depth, "probs": dict(sorted(self.probs.items()))}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BallDistribution":
        obj = json.loads(text)
        return cls(int(obj["depth"]), {k: float(v) for k, v in obj["probs"].items()})


def _from_codes(codes: list[CanonicalCode], depth: int) -> BallDistribution:
    """Uniform law over the given codes; masses are exact count ratios."""
    counts: dict[str, int] = {}
    wit: dict[str, str] = {}
    for c in codes:
        d = c.digest
        if d in wit and wit[d] != c.text:
            raise RuntimeError(f"digest collision on {d}")
        wit[d] = c.text
        counts[d] = counts.get(d, 0) + 1
    total = len(codes)
    return BallDistribution(depth, {k: v / total for k, v in counts.items()}, wit)


def ball_codes(g: Graph, h: int, v_max: int = V_MAX) -> list[CanonicalCode]:
    return [canonical_code(rooted_ball(g, x, h), v_max=v_max) for x in range(g.n)]


def ball_distribution(g: Graph, h: int, v_max: int = V_MAX) -> BallDistribution:
    """Empirical law of the depth-h ball around a uniform vertex."""
    if g.n == 0:
        raise GraphError("graph has no vertices")
    codes = ball_codes(g, h, v_max)
    return _from_codes(codes, h)


def tv_distance(p: BallDistribution, q: BallDistribution) -> float:
    """sup_A |p(A) - q(A)| = half the L1 distance."""
    if p.depth != q.depth:
        raise ValueError("distributions have different depths")
    for k in p.witnesses.keys() & q.witnesses.keys():
        if p.witnesses[k] != q.witnesses[k]:
            raise RuntimeError(f"digest collision on {k}")
    keys = p.probs.keys() | q.probs.keys()
    return 0.5 * math.fsum(abs(p.probs.get(k, 0.0) - q.probs.get(k, 0.0)) for k in keys)


# --------------------------------------------------------- universal cover


def cover_ball_codes(base: Graph, h: int) -> list[CanonicalCode]:
    """Code of the depth-h ball of the universal cover above each base vertex."""
    if h < 0:
        raise ValueError("depth must be >= 0")
    inv, term, outs = base.involution, base.terminus, base.out_half_edges
    memo: dict[tuple[int, int], str] = {}

    def edge_code(e: int, k: int) -> str:
        # subtree beyond half-edge e, k levels deep
        key = (e, k)
        if key not in memo:
            if k == 0:
                memo[key] = tree_node_code(())
            else:
                back = int(inv[e])
                memo[key] = tree_node_code(edge_code(int(f), k - 1) for f in outs[int(term[e])] if f != back)
        return memo[key]

    out = []
    for v in range(base.n):
        kids = () if h == 0 else [edge_code(int(e), h - 1) for e in outs[v]]
        out.append(CanonicalCode("T" + tree_node_code(kids)))
    return out


def lift_limit_distribution(base: Graph, h: int) -> BallDistribution:
    """Uniform mixture over base vertices of the universal-cover depth-h balls."""
    if base.n == 0:
        raise GraphError("base has no vertices")
    if np.any(base.degrees < 1):
        raise GraphError("base needs minimum degree >= 1")
    return _from_codes(cover_ball_codes(base, h), h)


def cover_mismatch_fraction(g: Graph, spec: LiftSpec, h: int) -> float:
    """Fraction of lifted vertices whose ball differs from the cover ball above their projection."""
    cover = [c.text for c in cover_ball_codes(spec.base, h)]
    proj = spec.projection()
    return float(np.mean([canonical_code(rooted_ball(g, x, h)).text != cover[proj[x]] for x in range(g.n)]))


def bst_profile(g: Graph, r: int) -> float:
    """Fraction of vertices with injectivity radius < r."""
    if g.n == 0:
        return 0.0
    return float(np.mean([injectivity_radius(g, x, cap=r) < r for x in range(g.n)]))


def lift_depth(n: int, max_degree: int) -> int:
    """h = floor(c log n) with c = 1 / (8 log(d - 1))."""
    if max_degree <= 2:
        raise ValueError("needs maximum degree >= 3")
    return int(math.floor(math.log(n) / (8 * math.log(max_degree - 1))))
