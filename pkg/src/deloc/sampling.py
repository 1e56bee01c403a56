"""Uniform vectors on spheres and window subspaces, Haar eigenbases, exact laws.

Monte Carlo work is split into fixed-size chunks, each seeded from
``np.random.SeedSequence(seed).spawn``; chunk results are merged in index
order, so the output does not depend on the worker count (env var
``DELOC_WORKERS``).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from statsmodels.stats.proportion import proportion_confint

from .spectral import EigenDecomposition, SpectralWindow, lq_norm

CHUNK = 4096


# ------------------------------------------------------------ constants


@lru_cache(maxsize=None)
def stirling_constants() -> dict[str, float]:
    """Suprema of the two Gamma-ratio bounds used for the moment estimate.

    gamma_q  = sup_{q>=2} (Gamma((q+1)/2)/Gamma(1/2))^(1/q) / sqrt(q)   (attained at q=2: 1/2)
    gamma_N  = sup_{q>=2,N>=1} sqrt(N) (Gamma(N/2)/Gamma((q+N)/2))^(1/q) (limit N->inf: sqrt 2)

    kappa = gamma_q * gamma_N bounds E(||u||_p^q)^(1/q) / (sqrt(q) (||Pi||_{p/2}/N)^(1/2));
    median_C1 = 2 kappa (median <= 2 * mean); deviation_C = 2 * median_C1.
    """
    q = np.concatenate([np.linspace(2, 50, 4801), np.geomspace(50, 1e7, 2000)])
    gq = float(np.max(np.exp((gammaln((q + 1) / 2) - gammaln(0.5)) / q) / np.sqrt(q)))
    qs = np.concatenate([np.linspace(2, 20, 181), np.geomspace(20, 1e5, 100)])
    ns = np.concatenate([np.arange(1, 500), np.geomspace(500, 1e7, 100)])
    Q, N = np.meshgrid(qs, ns)
    ratio = np.sqrt(N) * np.exp((gammaln(N / 2) - gammaln((Q + N) / 2)) / Q)
    # the grid maximum sits at the N -> infinity limit sqrt(2), up to rounding
    gn = max(float(ratio.max()), math.sqrt(2.0))
    gn = math.sqrt(2.0) if abs(gn - math.sqrt(2.0)) < 1e-5 else gn
    kappa = gq * gn
    return {
        "gamma_q": gq,
        "gamma_N": gn,
        "kappa": kappa,
        "median_C1": 2 * kappa,
        "deviation_C": 4 * kappa,
    }


# ---------------------------------------------------------------- helpers


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("DELOC_WORKERS", "1")))
    except ValueError:
        return 1


def chunk_seeds(seed, trials: int, chunk: int = CHUNK) -> list[tuple[np.random.SeedSequence, int]]:
    """Split ``trials`` into (seed-sequence, size) chunks; independent of worker count."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sizes = [chunk] * (trials // chunk) + ([trials % chunk] if trials % chunk else [])
    return list(zip(ss.spawn(len(sizes)), sizes))


def map_chunks(fn, seed, trials: int, chunk: int = CHUNK) -> list:
    jobs = chunk_seeds(seed, trials, chunk)
    call = lambda job: fn(np.random.default_rng(job[0]), job[1])
    w = _workers()
    if w == 1 or len(jobs) == 1:
        return [call(j) for j in jobs]
    with ThreadPoolExecutor(w) as ex:
        return list(ex.map(call, jobs))


def wilson_interval(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    lo, hi = proportion_confint(successes, trials, alpha=1 - level, method="wilson")
    return float(lo), float(hi)


# ----------------------------------------------------------------- sphere


def sample_sphere(d: int, seed=None, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere of R^d (normalized Gaussians)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def sphere_constant(d: int) -> float:
    """C_d = 2 Gamma(d/2) / (Gamma((d-1)/2) Gamma(1/2))."""
    return 2.0 * math.exp(gammaln(d / 2) - gammaln((d - 1) / 2) - gammaln(0.5))


def marginal_tail_exact(d: int, t: float) -> float:
    """P(|x_1| > t) for x uniform on S^{d-1}, by quadrature of C_d int_0^theta sin^{d-2}."""
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    theta = math.acos(t)
    if theta == 0.0:
        return 0.0
    val, _ = integrate.quad(lambda p: math.sin(p) ** (d - 2), 0.0, theta, epsabs=1e-13, epsrel=1e-12)
    return min(1.0, sphere_constant(d) * val)


def window_tail_exact(p: float, n_window: int, t: float) -> float:
    """P(|u(x)| > t) for u uniform in a window with N(I)=n_window and Pi_I(x,x)=p."""
    if t < 0:
        return 1.0
    if t >= math.sqrt(p):
        return 0.0
    if n_window == 1:
        return 1.0
    return marginal_tail_exact(n_window, t / math.sqrt(p))


def moment_exact(q: float, n_window: int, p: float) -> float:
    """E|u(x)|^q = Gamma((q+1)/2) Gamma(N/2) / (Gamma((q+N)/2) Gamma(1/2)) * p^(q/2)."""
    if n_window < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 <= p <= 1.0 + 1e-12:
        raise ValueError("p must lie in [0, 1]")
    log_ratio = gammaln((q + 1) / 2) + gammaln(n_window / 2) - gammaln((q + n_window) / 2) - gammaln(0.5)
    return math.exp(log_ratio) * max(p, 0.0) ** (q / 2)


# ------------------------------------------------------- window vectors


@dataclass(frozen=True, eq=False)
class RandomUnitVector:
    window: SpectralWindow
    coeffs: np.ndarray
    assembled: np.ndarray


def sample_window_vector(sw: SpectralWindow, seed=None) -> RandomUnitVector:
    if sw.count < 1:
        raise ValueError("empty window")
    z = sample_sphere(sw.count, seed)
    return RandomUnitVector(sw, z, sw.basis @ z)


def sample_window_vectors(sw: SpectralWindow, size: int, seed=None) -> np.ndarray:
    """``size`` independent window vectors as rows of a (size, n) array."""
    if sw.count < 1:
        raise ValueError("empty window")
    z = sample_sphere(sw.count, seed, size=size)
    return z @ sw.basis.T


def window_coordinate_samples(sw: SpectralWindow, x: int, size: int, seed=None) -> np.ndarray:
    """Samples of u(x) only; avoids materializing whole vectors."""
    row = sw.basis[x]
    parts = map_chunks(lambda rng, k: sample_sphere(sw.count, rng, size=k) @ row, seed, size)
    return np.concatenate(parts)


# ------------------------------------------------------------ Haar bases


def haar_orthogonal(m: int, seed=None) -> np.ndarray:
    """Haar-distributed element of O(m): QR of a Gaussian matrix with diag(R) > 0."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


@dataclass(frozen=True, eq=False)
class RandomEigenbasis:
    decomposition: EigenDecomposition
    rotations: tuple[np.ndarray, ...]
    vectors: np.ndarray


def random_eigenbasis(d: EigenDecomposition, seed=None) -> RandomEigenbasis:
    """Rotate every eigenspace block by an independent Haar orthogonal matrix."""
    rng = np.random.default_rng(seed)
    vecs = np.empty_like(d.vectors)
    rots = []
    for g in d.groups:
        q = haar_orthogonal(g.size, rng)
        rots.append(q)
        vecs[:, g] = d.vectors[:, g] @ q
    return RandomEigenbasis(d, tuple(rots), vecs)


# ----------------------------------------------------- Lq deviations


@dataclass
class ExceedanceResult:
    threshold: float
    bound: float
    exceed: int
    trials: int
    constant: float
    q: float
    lam: float
    n_window: int

    @property
    def frequency(self) -> float:
        return self.exceed / self.trials

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.exceed, self.trials)


def lq_norm_samples(sw: SpectralWindow, q: float, trials: int, seed=None) -> np.ndarray:
    return np.concatenate(
        map_chunks(lambda rng, k: lq_norm(sample_window_vectors(sw, k, rng), q), seed, trials)
    )


def lq_threshold(n_window: int, q: float, lam: float, constant: float | None = None) -> float:
    c = stirling_constants()["deviation_C"] if constant is None else constant
    return c * lam * math.sqrt(q) * n_window ** (1 / q - 0.5)


def lq_tail_bound(n_window: int, q: float, lam: float, constant: float | None = None) -> float:
    """4 exp(-C^2 Lambda^2 q N^(2/q) / 8)."""
    c = stirling_constants()["deviation_C"] if constant is None else constant
    return 4.0 * math.exp(-(c**2) * lam**2 * q * n_window ** (2 / q) / 8)


def lq_exceedance_mc(sw: SpectralWindow, q: float, lam: float, trials: int = 10_000, seed=None, constant: float | None = None) -> ExceedanceResult:
    """Empirical P(||u||_q >= C Lambda sqrt(q) N^(1/q - 1/2)) for u uniform in the window."""
    c = stirling_constants()["deviation_C"] if constant is None else constant
    thr = lq_threshold(sw.count, q, lam, c)
    norms = lq_norm_samples(sw, q, trials, seed)
    return ExceedanceResult(thr, lq_tail_bound(sw.count, q, lam, c), int(np.sum(norms >= thr)), trials, c, q, lam, sw.count)


@dataclass
class ConcentrationResult:
    median: float
    r_grid: np.ndarray
    deviation_freq: np.ndarray
    deviation_count: np.ndarray
    bound: np.ndarray
    trials: int
    median_bound: float

    def wilson_upper(self, level: float = 0.99) -> np.ndarray:
        return np.array([wilson_interval(int(c), self.trials, level)[1] for c in self.deviation_count])


def median_and_concentration(sw: SpectralWindow, q: float, trials: int = 10_000, seed=None, r_grid=(0.05, 0.1, 0.2)) -> ConcentrationResult:
    """Median of ||u||_q and empirical P(| ||u||_q - median | > r) against 4 exp(-N r^2 / 2)."""
    norms = lq_norm_samples(sw, q, trials, seed)
    med = float(np.median(norms))
    r = np.asarray(r_grid, dtype=float)
    counts = np.array([int(np.sum(np.abs(norms - med) > ri)) for ri in r])
    c1 = stirling_constants()["median_C1"]
    return ConcentrationResult(
        median=med,
        r_grid=r,
        deviation_freq=counts / trials,
        deviation_count=counts,
        bound=4.0 * np.exp(-sw.count * r**2 / 2),
        trials=trials,
        median_bound=c1 * math.sqrt(q) * sw.count ** (1 / q - 0.5),
    )


def expected_norm_bound(sw: SpectralWindow, p: float, q: float) -> float:
    """kappa sqrt(q) (||Pi||_{p/2} / N)^(1/2), bounding E(||u||_p^q)^(1/q) for 2 <= p <= q."""
    kappa = stirling_constants()["kappa"]
    pi_norm = np.sum(sw.proj_diag ** (p / 2)) ** (2 / p)
    return kappa * math.sqrt(q) * math.sqrt(pi_norm / sw.count)
