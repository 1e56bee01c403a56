"""Eigendecompositions, spectral windows and projector diagonals.

Norms on [n] use counting measure: ||u||_q = (sum_i |u_i|^q)^(1/q).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph_core import Graph, adjacency_matrix


class SpectralError(ValueError):
    pass


class EigenspaceSplitWarning(UserWarning):
    """A window boundary cuts through a numerically degenerate eigenspace."""


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns are eigenvectors
    groups: tuple[np.ndarray, ...]  # maximal runs of eigenvalues within tol
    tol: float

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([g.size for g in self.groups])

    @property
    def distinct_values(self) -> np.ndarray:
        return np.array([self.values[g].mean() for g in self.groups])

    @property
    def max_multiplicity(self) -> int:
        return int(self.multiplicities.max())

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.values).max()) if self.n else 0.0

    @cached_property
    def group_of(self) -> np.ndarray:
        """Index of the eigenspace containing each eigenvalue index."""
        out = np.empty(self.n, dtype=np.int64)
        for k, g in enumerate(self.groups):
            out[g] = k
        return out

    def with_vectors(self, vectors: np.ndarray) -> "EigenDecomposition":
        return EigenDecomposition(self.values, vectors, self.groups, self.tol)


def group_eigenvalues(values: np.ndarray, tol: float) -> tuple[np.ndarray, ...]:
    if values.size == 0:
        return ()
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return tuple(np.split(np.arange(values.size), breaks))


def decompose(a, tol: float | None = None) -> EigenDecomposition:
    """Dense symmetric eigensolve with eigenspace grouping.

    ``a`` may be a matrix or a :class:`Graph`. Eigenvalues closer than
    ``tol`` (default 1e-8 times the spectral radius) are grouped.
    """
    if isinstance(a, Graph):
        a = adjacency_matrix(a)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpectralError("matrix must be square")
    if a.size and np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise SpectralError("matrix is not symmetric")
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}") from exc
    if tol is None:
        radius = float(np.abs(values).max()) if values.size else 0.0
        tol = 1e-8 * radius if radius > 0 else 1e-12
    return EigenDecomposition(values, vectors, group_eigenvalues(values, tol), tol)


# ---------------------------------------------------------------- windows


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.hi < self.lo:
            raise SpectralError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class IndexSet:
    """Window given by eigenvalue indices into the ascending spectrum."""

    indices: tuple[int, ...]

    def __init__(self, indices):
        object.__setattr__(self, "indices", tuple(sorted({int(i) for i in np.atleast_1d(indices)})))


def eigenspace_window(d: EigenDecomposition, k: int) -> IndexSet:
    """Singleton window {lambda} for the k-th distinct eigenvalue."""
    return IndexSet(d.groups[k])


def parse_window(text: str):
    """'a:b' -> Interval, 'idx:i,j,...' -> IndexSet, 'idx:i-j' -> index range."""
    head, _, rest = text.partition(":")
    if head == "idx":
        idx = []
        for part in rest.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                idx += range(int(lo), int(hi) + 1)
            else:
                idx.append(int(part))
        return IndexSet(idx)
    return Interval(float(head), float(rest))


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    selector: Interval | IndexSet
    indices: np.ndarray
    basis: np.ndarray  # n x N(I), the window's eigenvector columns
    proj_diag: np.ndarray
    splits_eigenspace: bool = False

    @property
    def count(self) -> int:
        return int(self.indices.size)

    @property
    def n(self) -> int:
        return self.proj_diag.size


def window_indices(d: EigenDecomposition, w: Interval | IndexSet) -> np.ndarray:
    if isinstance(w, Interval):
        # closed interval, widened by the grouping tolerance
        mask = (d.values >= w.lo - d.tol) & (d.values <= w.hi + d.tol)
        return np.flatnonzero(mask)
    idx = np.asarray(w.indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= d.n):
        raise SpectralError("window index out of range")
    return idx


def splits_eigenspace(d: EigenDecomposition, idx: np.ndarray) -> bool:
    inside = np.zeros(d.n, dtype=bool)
    inside[idx] = True
    return any(0 < inside[g].sum() < g.size for g in d.groups)


def projector_diagonal(d: EigenDecomposition, w: Interval | IndexSet, vectors: np.ndarray | None = None) -> SpectralWindow:
    """Diagonal of the spectral projector onto the window's eigenvectors."""
    idx = window_indices(d, w)
    split = splits_eigenspace(d, idx)
    if split:
        warnings.warn(
            "window boundary splits an eigenspace; the projector diagonal then depends on the basis",
            EigenspaceSplitWarning,
            stacklevel=2,
        )
    basis = (d.vectors if vectors is None else vectors)[:, idx]
    return SpectralWindow(w, idx, basis, np.einsum("ij,ij->i", basis, basis), split)


def lq_norm(u: np.ndarray, q: float, axis: int = -1) -> np.ndarray:
    u = np.abs(np.asarray(u))
    if np.isinf(q):
        return u.max(axis=axis)
    return (u**q).sum(axis=axis) ** (1.0 / q)


def deloc_measure(sw: SpectralWindow, q: float) -> float:
    """sum_x Pi_I(x, x)^(q/2)."""
    if q < 2:
        raise SpectralError("q must be >= 2")
    return float(np.sum(np.clip(sw.proj_diag, 0, None) ** (q / 2)))


def projector_norm(sw: SpectralWindow, q: float) -> float:
    """||Pi_I diagonal||_{L^{q/2}}."""
    return deloc_measure(sw, q) ** (2.0 / q)


def apr(d: EigenDecomposition, w: Interval | IndexSet, q: float, vectors: np.ndarray | None = None) -> float:
    """Averaged participation ratio of the (stored or supplied) basis over the window."""
    idx = window_indices(d, w)
    if idx.size == 0:
        raise SpectralError("empty window")
    cols = (d.vectors if vectors is None else vectors)[:, idx]
    return float(np.sum(np.abs(cols) ** q) / idx.size)


def sup_inf_residual_bound(sw: SpectralWindow) -> float:
    if not isinstance(sw.selector, Interval):
        raise SpectralError("residual bound needs an interval window")
    return sw.selector.length


def residual_norm(a: np.ndarray, u: np.ndarray, lam: float) -> float:
    """||(A - lam) u||_2."""
    return float(np.linalg.norm(a @ u - lam * u))


def constancy_defect(sw: SpectralWindow) -> float:
    """max_x |Pi_I(x,x) - N(I)/n|; zero on vertex-transitive graphs."""
    return float(np.max(np.abs(sw.proj_diag - sw.count / sw.n)))


def random_windows(d: EigenDecomposition, count: int, seed=None) -> list[IndexSet]:
    """Random unions of whole eigenspaces (so they never split one)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = rng.integers(1, len(d.groups) + 1)
        chosen = rng.choice(len(d.groups), size=k, replace=False)
        out.append(IndexSet(np.concatenate([d.groups[c] for c in chosen])))
    return out


def export_json(d: EigenDecomposition, sw: SpectralWindow | None = None) -> str:
    payload = {
        "values": d.distinct_values.tolist(),
        "multiplicities": d.multiplicities.tolist(),
    }
    if sw is not None:
        payload["window_count"] = sw.count
        payload["proj_diag"] = sw.proj_diag.tolist()
    return json.dumps(payload, sort_keys=True)
