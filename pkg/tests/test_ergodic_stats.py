from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from deloc.ergodic_stats import (
    GAUSSIAN_STAT_C,
    EmpiricalMeasure,
    centered_indicator,
    dbl_lower_bound,
    empirical_measure,
    gaussian_stat_bound,
    qe_bound,
    qe_deviation,
    qe_failure_bound,
    qe_monte_carlo,
    qe_threshold,
    w1_to_gaussian,
)
from deloc.graph_core import complete_graph, cycle_graph
from deloc.sampling import sample_window_vector
from deloc.spectral import decompose, eigenspace_window, projector_diagonal


def w1_quadrature(atoms):
    x = np.sort(atoms)
    f = lambda t: abs(np.searchsorted(x, t, side="right") / x.size - stats.norm.cdf(t))
    pts = sorted(set(x.tolist()))
    val, _ = integrate.quad(f, -12, 12, points=pts, limit=500, epsabs=1e-11)
    return val


def test_w1_point_mass():
    m = empirical_measure(np.zeros(1))
    assert w1_to_gaussian(m) == pytest.approx(math.sqrt(2 / math.pi))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12))
def test_w1_matches_quadrature(atoms):
    a = np.array(atoms)
    assert w1_to_gaussian(EmpiricalMeasure(a)) == pytest.approx(w1_quadrature(a), abs=1e-7)


def test_w1_shrinks_with_gaussian_samples():
    rng = np.random.default_rng(0)
    small = w1_to_gaussian(EmpiricalMeasure(rng.standard_normal(100)))
    large = w1_to_gaussian(EmpiricalMeasure(rng.standard_normal(100000)))
    assert large < small and large < 0.02


def test_empty_measure_rejected():
    with pytest.raises(ValueError):
        w1_to_gaussian(EmpiricalMeasure(np.array([])))


def test_dbl_bracket():
    rng = np.random.default_rng(1)
    for atoms in (np.zeros(5), rng.uniform(-3, 3, 50), rng.standard_normal(500)):
        m = EmpiricalMeasure(atoms)
        assert 0 <= dbl_lower_bound(m) <= w1_to_gaussian(m) + 1e-12


def test_dbl_gaussian_expectations_by_quadrature():
    # the lower bound for a point mass at c equals max over test functions of |f(c) - E f(Z)|
    c = 0.0
    grid = np.array([0.7])
    ramp = integrate.quad(lambda t: np.clip(t - 0.7, -1, 1) * stats.norm.pdf(t), -12, 12, points=[-0.3, 1.7])[0]
    hat = integrate.quad(lambda t: max(0.0, 1 - abs(t - 0.7)) * stats.norm.pdf(t), -12, 12, points=[-0.3, 0.7, 1.7])[0]
    expect = max(abs(np.clip(c - 0.7, -1, 1) - ramp), abs(max(0, 1 - abs(c - 0.7)) - hat))
    assert dbl_lower_bound(EmpiricalMeasure(np.array([c])), grid) == pytest.approx(expect, abs=1e-10)


def test_dbl_point_mass_value():
    assert dbl_lower_bound(EmpiricalMeasure(np.zeros(1))) == pytest.approx(0.631, abs=1e-3)


def test_gaussian_stat_bound():
    assert GAUSSIAN_STAT_C == pytest.approx(1 / (9 * 65536))
    assert gaussian_stat_bound(1, 0.5) == pytest.approx(48 * math.sqrt(math.pi) * 0.5**-1.5)
    assert gaussian_stat_bound(10**4, 0.5) > 1


def test_empirical_measure_second_moment():
    d = decompose(cycle_graph(30))
    sw = projector_diagonal(d, eigenspace_window(d, 3))
    m = empirical_measure(sample_window_vector(sw, seed=0))
    assert m.size == 30 and m.second_moment() == pytest.approx(1)


def test_qe_deviation_uniform_vector():
    u = np.ones(9) / 3
    f = np.arange(9.0)
    assert qe_deviation(u, f) == pytest.approx(0)
    e = np.zeros(9)
    e[8] = 1
    assert qe_deviation(e, f) == pytest.approx(4)
    with pytest.raises(ValueError):
        qe_deviation(e, f[:3])


def test_qe_threshold_and_bounds():
    f = centered_indicator(100, range(50))
    assert f.mean() == pytest.approx(0)
    assert qe_threshold(f, 2.0) == pytest.approx(2 * np.linalg.norm(f) / 10)
    assert qe_failure_bound(64, 8) == pytest.approx(3 * math.exp(-8) + math.exp(-64 / 12))
    assert qe_bound(8, 2, [64, 1]) == pytest.approx(1 - 2 * (64 * qe_failure_bound(64, 8) + qe_failure_bound(1, 8)))


def test_qe_monte_carlo_deterministic():
    d = decompose(complete_graph(40))
    f = centered_indicator(40, range(20))
    a = qe_monte_carlo(d, 0, [f], t=2.0, draws=300, seed=4)
    b = qe_monte_carlo(d, 0, [f], t=2.0, draws=300, seed=4)
    assert a.vector_failures == b.vector_failures and a.max_deviation == b.max_deviation
    assert a.vectors_per_draw == 39
    assert a.draw_frequency <= a.wilson_upper


def test_qe_monte_carlo_small_threshold_fails():
    d = decompose(complete_graph(20))
    f = centered_indicator(20, range(10))
    res = qe_monte_carlo(d, 0, [f], t=1e-6, draws=50, seed=0)
    assert res.draw_frequency == 1.0
