"""统计、随机流、求积与并行工具"""
import numpy as np
import pytest

from utils.parallel import run_ordered
from utils.quadrature import (
    chebyshev_first_kind,
    chebyshev_second_kind,
    composite_gauss_legendre,
    gauss_legendre,
)
from utils.rng import make_generator
from utils.stats import (
    batch_length,
    effective_sample_size,
    estimate_mean,
    integrated_autocorr_time,
    loglog_slope,
    moment_z_scores,
    split_by_chain,
    wilson_interval,
)


def test_generators_are_reproducible_and_separated():
    a = make_generator(42, 0).standard_normal(5)
    b = make_generator(42, 0).standard_normal(5)
    c = make_generator(42, 1).standard_normal(5)
    d = make_generator(43, 0).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_large_seed_accepted():
    make_generator((1 << 64) - 1, 3).uniform()


def test_run_ordered_preserves_order():
    assert run_ordered(lambda x: x * x, range(10), threads=4) == [x * x for x in range(10)]
    assert run_ordered(lambda x: x + 1, [1], threads=8) == [2]


def test_chebyshev_rules():
    t, w = chebyshev_first_kind(-2.0, 2.0, 16)
    assert np.sum(w) == pytest.approx(np.pi)
    assert np.sum(w * t**2) == pytest.approx(2 * np.pi)
    s, ws = chebyshev_second_kind(-2.0, 2.0, 16)
    assert np.sum(ws) == pytest.approx(2 * np.pi)
    assert np.sum(ws * s**2) == pytest.approx(2 * np.pi)


def test_gauss_legendre_rules():
    x, w = gauss_legendre(0.0, 2.0, 5)
    assert np.sum(w * x**4) == pytest.approx(32 / 5)
    x, w = composite_gauss_legendre(-1.0, 1.0, 64)
    assert len(x) == 64
    assert np.sum(w * np.exp(x)) == pytest.approx(np.e - 1 / np.e, rel=1e-14)


def test_iid_estimate():
    values = np.random.default_rng(0).normal(size=1000)
    estimate = estimate_mean([values], iid=True)
    assert estimate.n == 1000
    assert estimate.stderr == pytest.approx(values.std(ddof=1) / np.sqrt(1000))


def test_correlated_chain_has_larger_stderr():
    rng = np.random.default_rng(1)
    x = np.zeros(4000)
    for i in range(1, len(x)):
        x[i] = 0.9 * x[i - 1] + rng.normal()
    tau = integrated_autocorr_time(x)
    assert 10 < tau < 30  # (1 + 0.9)/(1 − 0.9) = 19
    naive = estimate_mean([x], iid=True).stderr
    blocked = estimate_mean([x], iid=False).stderr
    assert blocked > 2 * naive
    assert batch_length([x]) >= 20
    assert effective_sample_size([x, x]) == pytest.approx(2 * len(x) / tau)


def test_estimate_edge_cases():
    assert estimate_mean([[]]).n == 0
    single = estimate_mean([[2.0]])
    assert single.mean == 2.0 and np.isnan(single.stderr)


def test_split_by_chain():
    values = np.arange(6.0)
    parts = split_by_chain(values, [0, 1, 0, 1, 2, 2])
    assert [p.tolist() for p in parts] == [[0.0, 2.0], [1.0, 3.0], [4.0, 5.0]]


def test_wilson_interval():
    low, high = wilson_interval(30, 100)
    assert low < 0.3 < high
    assert wilson_interval(0, 0) == (0.0, 1.0)
    low, high = wilson_interval(100, 100)
    assert high == pytest.approx(1.0) and low > 0.9


def test_moment_z_scores():
    x = np.random.default_rng(2).normal(size=2000)
    skew, kurt = moment_z_scores(x)
    assert abs(skew) < 4 and abs(kurt) < 4
    assert moment_z_scores([1.0, 2.0]) == (None, None)


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
    slope, err = loglog_slope(x, 3.0 * x**-2)
    assert slope == pytest.approx(-2.0)
    assert err == pytest.approx(0.0, abs=1e-8)
    slope, err = loglog_slope(x[:3], x[:3] ** 1.5)
    assert slope == pytest.approx(1.5)
    assert np.isnan(err)
