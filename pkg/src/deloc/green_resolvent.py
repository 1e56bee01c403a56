"""Green functions of finite graphs and of universal covers.

The cover of a finite base graph is a tree of finite cone type. Its Green
function comes from the non-backtracking recursion over base half-edges

    zeta_e = -(z + sum_{f in succ(e)} zeta_f)^(-1),
    succ(e) = {f : o(f) = t(e), f != iota(e)},
    R_oo   = -(z + sum_{o(e) = v} zeta_e)^(-1)  for o above v.

Near the real axis the plain fixed-point iteration stalls, so the solver
follows the solution down in Im z and polishes each step with Newton.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .graph_core import Graph, adjacency_matrix, from_edges
from .local_weak import (
    ball_distribution,
    canonical_code,
    cover_ball_codes,
    lift_limit_distribution,
    rooted_ball,
    tv_distance,
)
from .spectral import EigenDecomposition, Interval, SpectralError, decompose, projector_diagonal

E2PI = math.e**2 * math.pi  # the constant of the resolvent proximity bound
ETA_FLOOR = 1e-6
DAMPING = 0.5
MAX_ITER = 100_000
TOL = 1e-12


class ConvergenceError(RuntimeError):
    pass


class WindowTooSmall(ValueError):
    def __init__(self, length: float, required: float):
        super().__init__(f"window length {length:.4g} below the required minimum {required:.4g}")
        self.length = length
        self.required = required


def _check_z(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    return z


# ------------------------------------------------------------ finite graphs


@dataclass(frozen=True, eq=False)
class ResolventDiagonal:
    z: complex
    values: np.ndarray

    def trace_mean(self) -> complex:
        return complex(self.values.mean())


def finite_resolvent_diag(d: EigenDecomposition, z: complex) -> ResolventDiagonal:
    """R_xx(z) = sum_k psi_k(x)^2 / (lambda_k - z)."""
    z = _check_z(z)
    return ResolventDiagonal(z, (d.vectors**2) @ (1.0 / (d.values - z)))


def stieltjes(values: np.ndarray, z: complex) -> complex:
    """Normalized trace of the resolvent from eigenvalues alone."""
    return complex(np.mean(1.0 / (np.asarray(values) - z)))


def resolvent_entry(g: Graph, x: int, z: complex) -> complex:
    """<delta_x, (A - z)^(-1) delta_x> by a sparse solve."""
    z = _check_z(z)
    a = sparse.csc_matrix(adjacency_matrix(g)) - z * sparse.identity(g.n, format="csc")
    rhs = np.zeros(g.n, dtype=complex)
    rhs[x] = 1.0
    return complex(np.atleast_1d(spsolve(a, rhs))[x])


@dataclass
class WindowBound:
    lam: float
    t: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def worst_slack(self) -> float:
        return float(np.min(self.rhs - self.lhs))

    @property
    def holds(self) -> bool:
        return self.worst_slack >= -1e-12


def window_bound_check(d: EigenDecomposition, lam: float, t: float) -> WindowBound:
    """Pi_[lam-t, lam+t](x) <= 2 t Im R_xx(lam + i t) at every vertex."""
    if t <= 0:
        raise ValueError("t must be positive")
    mask = np.abs(d.values - lam) <= t
    lhs = (d.vectors[:, mask] ** 2).sum(axis=1)
    rhs = 2 * t * finite_resolvent_diag(d, complex(lam, t)).values.imag
    return WindowBound(lam, t, lhs, rhs)


# -------------------------------------------------------- cone-type system


@dataclass(eq=False)
class ConeTypeSystem:
    """Non-backtracking recursion data of a base graph's universal cover."""

    base: Graph
    successor: sparse.csr_matrix = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        g = self.base
        inv, term, outs = g.involution, g.terminus, g.out_half_edges
        rows, cols = [], []
        for e in range(g.half_edge_count):
            for f in outs[int(term[e])]:
                if f != inv[e]:
                    rows.append(e)
                    cols.append(int(f))
        m = g.half_edge_count
        self.successor = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
        self._dense = self.successor.toarray()

    @property
    def directed_edges(self) -> np.ndarray:
        return np.arange(self.base.half_edge_count)

    def successors(self, e: int) -> np.ndarray:
        return self.successor.indices[self.successor.indptr[e] : self.successor.indptr[e + 1]]

    def residual(self, zeta: np.ndarray, z: complex) -> float:
        return float(np.max(np.abs(zeta + 1.0 / (z + self._dense @ zeta)), initial=0.0))


def _newton(s: np.ndarray, z: complex, zeta: np.ndarray, tol: float, steps: int = 30):
    m = zeta.size
    for _ in range(steps):
        w = z + s @ zeta
        f = zeta + 1.0 / w
        if np.max(np.abs(f), initial=0.0) < tol:
            return zeta
        jac = np.eye(m) - (1.0 / w**2)[:, None] * s
        try:
            zeta = zeta - np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(zeta)):
            return None
    w = z + s @ zeta
    return zeta if np.max(np.abs(zeta + 1.0 / w), initial=0.0) < tol else None


def _damped(s: np.ndarray, z: complex, zeta: np.ndarray, tol: float, iters: int):
    for k in range(iters):
        new = DAMPING * zeta + (1 - DAMPING) * (-1.0 / (z + s @ zeta))
        if np.max(np.abs(new - zeta), initial=0.0) < tol:
            return new, k + 1
        zeta = new
    return zeta, iters


def _accept(zeta, z: complex) -> bool:
    return zeta is not None and bool(np.all(zeta.imag > 0)) and bool(np.all(np.abs(zeta) <= 1 / z.imag + 1e-9))


def cover_zeta(cs: ConeTypeSystem, z: complex, tol: float = TOL) -> np.ndarray:
    """zeta_e(z) for every base half-edge e; cached per z."""
    z = _check_z(z)
    if z.imag < ETA_FLOOR:
        warnings.warn(f"Im z = {z.imag:g} is below the floor {ETA_FLOOR:g}", RuntimeWarning, stacklevel=2)
    key = (z, tol)
    if key in cs._cache:
        return cs._cache[key]
    s = cs._dense
    m = s.shape[0]
    if m == 0:
        return np.zeros(0, dtype=complex)
    eta0 = max(1.0, z.imag)
    z0 = complex(z.real, eta0)
    zeta, used = _damped(s, z0, np.full(m, -1.0 / z0), tol, 2000)
    polished = _newton(s, z0, zeta, tol)
    if not _accept(polished, z0):
        zeta, more = _damped(s, z0, zeta, tol, MAX_ITER - used)
        polished = zeta if cs.residual(zeta, z0) < tol else None
        if not _accept(polished, z0):
            raise ConvergenceError(f"zeta recursion did not converge at z = {z0}")
    zeta, eta = polished, eta0
    # continuation: lower Im z geometrically, Newton from the previous solution
    ratio = 0.5
    while eta > z.imag:
        target = max(z.imag, eta * ratio)
        trial = _newton(s, complex(z.real, target), zeta, tol)
        if _accept(trial, complex(z.real, target)):
            zeta, eta = trial, target
            ratio = min(0.5, ratio * ratio)
        else:
            ratio = math.sqrt(ratio)
            if ratio > 1 - 1e-6:
                raise ConvergenceError(f"continuation stalled at Im z = {eta:g} for z = {z}")
    cs._cache[key] = zeta
    return zeta


def cover_green_root(cs: ConeTypeSystem, v: int, z: complex, tol: float = TOL) -> complex:
    """R_oo(z) on the universal cover, o above base vertex v."""
    zeta = cover_zeta(cs, z, tol)
    z = complex(z)
    return complex(-1.0 / (z + zeta[cs.base.out_half_edges[v]].sum()))


def cover_green_all(cs: ConeTypeSystem, z: complex, tol: float = TOL) -> np.ndarray:
    zeta = cover_zeta(cs, z, tol)
    sums = np.bincount(cs.base.origin, weights=zeta.real, minlength=cs.base.n) + 1j * np.bincount(
        cs.base.origin, weights=zeta.imag, minlength=cs.base.n
    )
    return -1.0 / (complex(z) + sums)


# ------------------------------------------------------ truncation oracles


def regular_tree_green(d: int, z: complex, depth: int = 30) -> complex:
    """Root Green function of the d-regular tree cut at ``depth``.

    Radially symmetric vectors reduce the tree to a path with couplings
    sqrt(d) (root to level 1) and sqrt(d - 1) beyond.
    """
    z = complex(z)
    off = np.full(depth, math.sqrt(d - 1), dtype=complex)
    if depth:
        off[0] = math.sqrt(d)
    jac = np.diag(off, 1) + np.diag(off, -1) - z * np.eye(depth + 1)
    rhs = np.zeros(depth + 1, dtype=complex)
    rhs[0] = 1.0
    return complex(np.linalg.solve(jac, rhs)[0])


def cover_unfolding(base: Graph, v: int, depth: int, max_nodes: int = 200_000) -> Graph:
    """Universal-cover ball of the given depth above v, as an explicit tree."""
    inv, term, outs = base.involution, base.terminus, base.out_half_edges
    edges = []
    frontier = [(0, v, -1)]  # (node, base vertex, half-edge used to arrive)
    count = 1
    for _ in range(depth):
        nxt = []
        for node, u, came in frontier:
            back = -1 if came < 0 else int(inv[came])
            for e in outs[u]:
                if e == back:
                    continue
                edges.append((node, count))
                nxt.append((count, int(term[e]), int(e)))
                count += 1
                if count > max_nodes:
                    raise ValueError("unfolding exceeds the node cap")
        frontier = nxt
    return from_edges(count, edges)


def truncated_cover_green(base: Graph, v: int, z: complex, depth: int) -> complex:
    return resolvent_entry(cover_unfolding(base, v, depth), 0, z)


def regular_quadratic_zeta(d: int, z: complex) -> complex:
    """Root with Im > 0 of (d - 1) zeta^2 + z zeta + 1 = 0."""
    z = complex(z)
    if d == 1:
        return -1.0 / z
    disc = np.sqrt(z * z - 4 * (d - 1))
    roots = [(-z + disc) / (2 * (d - 1)), (-z - disc) / (2 * (d - 1))]
    return complex(max(roots, key=lambda r: r.imag))


def kesten_mckay_density(d: int, lam):
    """d sqrt(4(d-1) - lam^2) / (2 pi (d^2 - lam^2)) on |lam| <= 2 sqrt(d-1)."""
    lam = np.asarray(lam, dtype=float)
    inside = 4 * (d - 1) - lam**2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(inside > 0, d * np.sqrt(np.clip(inside, 0, None)) / (2 * np.pi * (d**2 - lam**2)), 0.0)


# ------------------------------------------------------------ limit measure


def _as_system(base) -> ConeTypeSystem:
    return base if isinstance(base, ConeTypeSystem) else ConeTypeSystem(base)


def limit_spectral_measure(base, lam_grid, eta: float = 1e-3) -> np.ndarray:
    """(1 / (pi |V|)) sum_v Im R_oo(lam + i eta) on the grid."""
    cs = _as_system(base)
    if eta <= 0:
        raise ValueError("eta must be positive")
    return np.array([cover_green_all(cs, complex(x, eta)).imag.mean() / math.pi for x in np.atleast_1d(lam_grid)])


def limit_interval_mass(base, interval: Interval, eta: float = 1e-5, nodes: int = 64) -> float:
    """Mass the limit spectral measure gives to an interval, by Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = interval.length / 2
    pts = interval.mid + half * x
    return float(half * w @ limit_spectral_measure(base, pts, eta))


def density_csv(lam_grid, rho, eta: float) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["lambda", "rho", "eta"])
    for x, r in zip(np.atleast_1d(lam_grid), rho):
        wr.writerow([f"{x:.12g}", f"{r:.12g}", f"{eta:.3g}"])
    return buf.getvalue()


@dataclass
class GreenEstimate:
    value: float
    argmax: tuple[float, float]
    table: np.ndarray  # (len(lam), len(eta))
    growing: bool  # still increasing at the smallest eta


def green_assumption_estimate(base, interval: Interval, q: float, eta_grid, points: int = 21) -> GreenEstimate:
    """max over (lam, eta) of the base-vertex mean of (Im R)^(q/2) + |R|^2."""
    cs = _as_system(base)
    lams = np.linspace(interval.lo, interval.hi, points)
    etas = np.sort(np.atleast_1d(np.asarray(eta_grid, dtype=float)))[::-1]
    if lams.size == 0 or etas.size == 0:
        raise ValueError("grids must be nonempty")
    tab = np.empty((lams.size, etas.size))
    for i, x in enumerate(lams):
        for j, eta in enumerate(etas):
            r = cover_green_all(cs, complex(x, eta))
            tab[i, j] = float(np.mean(r.imag ** (q / 2) + np.abs(r) ** 2))
    i, j = np.unravel_index(np.argmax(tab), tab.shape)
    growing = etas.size > 1 and bool(np.any(tab[:, -1] > 1.05 * tab[:, -2]))
    return GreenEstimate(float(tab[i, j]), (float(lams[i]), float(etas[j])), tab, growing)


@dataclass
class RegularityRegion:
    lam: np.ndarray
    good: np.ndarray
    certified: list[tuple[float, float]]
    excluded: list[tuple[float, float]]

    def to_json(self) -> str:
        return json.dumps({"certified": self.certified, "excluded": self.excluded})


def _runs(lam: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    for seg in np.split(idx, breaks + 1):
        out.append((float(lam[seg[0]]), float(lam[seg[-1]])))
    return out


def green_regularity_region(base, c1: float, c2: float, lam_grid, eta: float = ETA_FLOOR) -> RegularityRegion:
    """Grid points where c1 <= |Im zeta_e(lam + i eta)| <= c2 for every half-edge."""
    if c1 > c2:
        raise ValueError("need c1 <= c2")
    cs = _as_system(base)
    lam = np.atleast_1d(np.asarray(lam_grid, dtype=float))
    good = np.empty(lam.size, dtype=bool)
    for i, x in enumerate(lam):
        im = np.abs(cover_zeta(cs, complex(x, eta)).imag)
        good[i] = bool(np.all((c1 <= im) & (im <= c2)))
    return RegularityRegion(lam, good, _runs(lam, good), _runs(lam, ~good))


# -------------------------------------------------- finite versus limit


def km_window_floor(max_degree: int, h: int, delta: float) -> float:
    """(20 D log(2h) / h) (1/delta) log(1/delta)."""
    if not 0 < delta < 1:
        return math.inf
    return 20 * max_degree * math.log(2 * h) / h * (1 / delta) * math.log(1 / delta)


@dataclass
class LocalKMResult:
    interval: Interval
    mu_n: float
    mu_bar: float
    tv: float
    delta: float
    floor: float

    @property
    def lhs(self) -> float:
        return abs(self.mu_n - self.mu_bar) / self.interval.length

    @property
    def floor_met(self) -> bool:
        return self.interval.length >= self.floor


def local_km_check(g, base, interval: Interval, h: int, values: np.ndarray | None = None, tv: float | None = None, strict: bool = True, eta: float = 1e-5) -> LocalKMResult:
    """|mu_n(I) - mu_bar(I)| / |I| together with the window floor of the local law.

    delta = max(h * d_TV, 1/h). With ``strict`` a window below the floor is
    refused; otherwise both sides are still computed and the floor reported.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    base_g = base.base if isinstance(base, ConeTypeSystem) else base
    if tv is None:
        tv = tv_distance(ball_distribution(g, h), lift_limit_distribution(base_g, h))
    delta = max(h * tv, 1.0 / h)
    floor = km_window_floor(int(base_g.max_degree), h, delta)
    if strict and interval.length < floor:
        raise WindowTooSmall(interval.length, floor)
    if values is None:
        values = np.linalg.eigvalsh(adjacency_matrix(g))
    mu_n = float(np.mean((values >= interval.lo) & (values <= interval.hi)))
    mu_bar = limit_interval_mass(base, interval, eta)
    return LocalKMResult(interval, mu_n, mu_bar, tv, delta, floor)


def proximity_imag(b: float, h: int) -> float:
    """Im z = zeta b ceil(log 2h) / (2h)."""
    return E2PI * b * math.ceil(math.log(2 * h)) / (2 * h)


@dataclass
class ProximityResult:
    z: complex
    r1: complex
    r2: complex
    bound: float

    @property
    def difference(self) -> float:
        return abs(self.r1 - self.r2)

    @property
    def holds(self) -> bool:
        return self.difference <= self.bound


def _root_code(g, x: int, h: int) -> str:
    if isinstance(g, ConeTypeSystem):
        return cover_ball_codes(g.base, h)[x].text
    return canonical_code(rooted_ball(g, x, h)).text


def _root_green(g, x: int, z: complex) -> complex:
    if isinstance(g, ConeTypeSystem):
        return cover_green_root(g, x, z)
    return resolvent_entry(g, x, z)


def resolvent_proximity_check(g1, x1: int, g2, x2: int, h: int, b: float, re: float = 0.0) -> ProximityResult:
    """|R^1_oo(z) - R^2_oo(z)| <= 1/(zeta b h) at Im z = zeta b ceil(log 2h)/(2h).

    Either graph may be a :class:`ConeTypeSystem`, standing for the universal
    cover rooted above the given base vertex.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if _root_code(g1, x1, h) != _root_code(g2, x2, h):
        raise ValueError("the depth-h balls are not isomorphic")
    z = complex(re, proximity_imag(b, h))
    return ProximityResult(z, _root_green(g1, x1, z), _root_green(g2, x2, z), 1.0 / (E2PI * b * h))


@dataclass
class ProjectorEstimate:
    interval: Interval
    q: float
    n: int
    count: int
    lhs: float  # ||Pi||_{q/2} / N(I)
    chain: float  # (|I|^{q/2} sum_x (Im R_xx)^{q/2})^{2/q} / N(I)
    floor: float

    @property
    def c_prime(self) -> float:
        return self.lhs / self.n ** (2 / self.q - 1)

    @property
    def chain_holds(self) -> bool:
        return self.lhs <= self.chain * (1 + 1e-12)


def projector_estimate_check(g, interval: Interval, q: float, h: int = 1, d: EigenDecomposition | None = None, floor_const: float = 1.0) -> ProjectorEstimate:
    """Left side ||Pi_I||_{q/2}/N(I) and the resolvent bound used to control it.

    With z = mid(I) + i|I|/2, Pi_I(x) <= |I| Im R_xx(z) pointwise.
    """
    if d is None:
        d = decompose(g)
    floor = floor_const * math.log(h) / h if h > 1 else 0.0
    if interval.length < floor:
        raise WindowTooSmall(interval.length, floor)
    sw = projector_diagonal(d, interval)
    if sw.count == 0:
        raise SpectralError("window contains no eigenvalues")
    lhs = float(np.sum(sw.proj_diag ** (q / 2)) ** (2 / q)) / sw.count
    z = complex(interval.mid, interval.length / 2)
    im_r = finite_resolvent_diag(d, z).values.imag
    chain = interval.length * float(np.sum(im_r ** (q / 2)) ** (2 / q)) / sw.count
    return ProjectorEstimate(interval, q, d.n, sw.count, lhs, chain, floor)
