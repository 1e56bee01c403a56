"""Entry statistics of random eigenvectors and quantum-ergodicity deviations.

Distances to the standard normal are reported as a bracket: a certified
lower bound from a finite family of bounded 1-Lipschitz test functions, and
the Wasserstein-1 distance as an upper proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .sampling import RandomUnitVector, map_chunks, random_eigenbasis, wilson_interval
from .spectral import EigenDecomposition

DEFAULT_GRID = np.linspace(-4.0, 4.0, 41)
GAUSSIAN_STAT_C = 1.0 / (9 * 2**16)

_SQRT_2PI = math.sqrt(2 * math.pi)


def _pdf(t):
    return np.exp(-0.5 * np.square(t)) / _SQRT_2PI


def _cdf_antiderivative(t):
    # d/dt (t Phi(t) + phi(t)) = Phi(t)
    return t * ndtr(t) + _pdf(t)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform weights on the atoms sqrt(n) u_i."""

    atoms: np.ndarray

    @property
    def size(self) -> int:
        return self.atoms.size

    def second_moment(self) -> float:
        return float(np.mean(self.atoms**2))


def empirical_measure(u) -> EmpiricalMeasure:
    vec = u.assembled if isinstance(u, RandomUnitVector) else np.asarray(u, dtype=float)
    return EmpiricalMeasure(math.sqrt(vec.size) * vec)


def w1_to_gaussian(m: EmpiricalMeasure) -> float:
    """int |F_emp - Phi| dt, integrated exactly between consecutive atoms."""
    x = np.sort(np.asarray(m.atoms, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empirical measure has no atoms")
    # tails: F = 0 left of x_1, F = 1 right of x_n
    total = _cdf_antiderivative(x[0]) + (_pdf(x[-1]) - x[-1] * ndtr(-x[-1]))
    if n > 1:
        a, b = x[:-1], x[1:]
        c = np.arange(1, n) / n
        s = np.clip(ndtri(c), a, b)
        ga, gs, gb = _cdf_antiderivative(a), _cdf_antiderivative(s), _cdf_antiderivative(b)
        total += np.sum(c * (s - a) - (gs - ga) + (gb - gs) - c * (b - s))
    return float(total)


def _ramp_gauss(c):
    """E clip(Z - c, -1, 1)."""
    lo, hi = c - 1, c + 1
    return -ndtr(lo) + ndtr(-hi) + (_pdf(lo) - _pdf(hi)) - c * (ndtr(hi) - ndtr(lo))


def _hat_gauss(c):
    """E max(0, 1 - |Z - c|)."""
    left = (1 - c) * (ndtr(c) - ndtr(c - 1)) + _pdf(c - 1) - _pdf(c)
    right = (1 + c) * (ndtr(c + 1) - ndtr(c)) - _pdf(c) + _pdf(c + 1)
    return left + right


def dbl_lower_bound(m: EmpiricalMeasure, grid=None) -> float:
    """Largest |E_mu f - E_N f| over ramps and hats centred on ``grid``.

    Every test function is bounded by 1 and 1-Lipschitz, so the result is a
    lower bound for the bounded-Lipschitz distance (and hence for W1).
    """
    c = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    if c.size == 0:
        raise ValueError("grid must be nonempty")
    t = np.asarray(m.atoms, dtype=float)[:, None]
    ramp_emp = np.clip(t - c, -1, 1).mean(axis=0)
    hat_emp = np.maximum(0.0, 1 - np.abs(t - c)).mean(axis=0)
    gaps = np.concatenate([np.abs(ramp_emp - _ramp_gauss(c)), np.abs(hat_emp - _hat_gauss(c))])
    return float(gaps.max())


def gaussian_stat_bound(m: int, eps: float, c: float = GAUSSIAN_STAT_C) -> float:
    """48 sqrt(pi) eps^(-3/2) exp(-c (m - 1) eps^5); vacuous (> 1) at moderate m."""
    return 48 * math.sqrt(math.pi) * eps**-1.5 * math.exp(-c * (m - 1) * eps**5)


# ----------------------------------------------------- quantum ergodicity


def qe_deviation(u, f) -> float:
    """|sum_x f(x) u(x)^2 - mean(f)|."""
    vec = u.assembled if isinstance(u, RandomUnitVector) else np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != vec.shape[-1:]:
        raise ValueError("f and u have different lengths")
    return np.abs(vec**2 @ f - f.mean())


def qe_threshold(f, t: float) -> float:
    """t ||f - mean(f)||_2 / sqrt(|V|)."""
    f = np.asarray(f, dtype=float)
    return t * float(np.linalg.norm(f - f.mean())) / math.sqrt(f.size)


def qe_failure_bound(m: int, t: float) -> float:
    """Per-vector failure probability 3 exp(-t sqrt(m)/8) + exp(-m/12)."""
    return 3 * math.exp(-t * math.sqrt(m) / 8) + math.exp(-m / 12)


def qe_bound(t: float, M: int, mults) -> float:
    """1 - M sum_k m_k (3 exp(-t sqrt(m_k)/8) + exp(-m_k/12))."""
    return 1.0 - M * sum(mk * qe_failure_bound(mk, t) for mk in mults)


def centered_indicator(n: int, support) -> np.ndarray:
    f = np.zeros(n)
    f[np.asarray(support, dtype=np.int64)] = 1.0
    return f - f.mean()


@dataclass
class QEResult:
    t: float
    threshold: float
    draws: int
    vectors_per_draw: int
    vector_failures: int
    draw_failures: int
    bound: float
    max_deviation: float

    @property
    def vector_frequency(self) -> float:
        return self.vector_failures / (self.draws * self.vectors_per_draw)

    @property
    def draw_frequency(self) -> float:
        return self.draw_failures / self.draws

    @property
    def wilson_upper(self) -> float:
        return wilson_interval(self.draw_failures, self.draws)[1]


def qe_monte_carlo(d: EigenDecomposition, group: int, fs, t: float, draws: int, seed=None) -> QEResult:
    """Haar eigenbasis draws; a draw fails if some basis vector of the chosen
    eigenspace deviates by more than the threshold for some test function."""
    fs = np.atleast_2d(np.asarray(fs, dtype=float))
    idx = d.groups[group]
    thr = np.array([qe_threshold(f, t) for f in fs])
    sub = EigenDecomposition(d.values[idx], d.vectors[:, idx], (np.arange(idx.size),), d.tol)

    def run(rng, k):
        vf = df = 0
        worst = 0.0
        for _ in range(k):
            basis = random_eigenbasis(sub, rng).vectors
            dev = np.abs((basis**2).T @ fs.T - fs.mean(axis=1))  # (m, len(fs))
            bad = dev > thr
            vf += int(bad.any(axis=1).sum())
            df += int(bad.any())
            worst = max(worst, float(dev.max()))
        return vf, df, worst

    parts = map_chunks(run, seed, draws, chunk=256)
    return QEResult(
        t=t,
        threshold=float(thr.min()),
        draws=draws,
        vectors_per_draw=idx.size,
        vector_failures=sum(p[0] for p in parts),
        draw_failures=sum(p[1] for p in parts),
        bound=qe_failure_bound(idx.size, t),
        max_deviation=max(p[2] for p in parts),
    )
