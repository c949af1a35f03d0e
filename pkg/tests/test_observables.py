"""样本统计量"""
import numpy as np
import pytest

from models.ensemble import Sample
from services.observables import (
    count_interval,
    displacement,
    f_kernel,
    linear_stat,
    log_char,
    log_char_batch,
    log_field_derivative,
    loop_observables,
    loop_residual_rank1,
    loop_residual_rankn,
    rescaled_points,
    stieltjes_emp,
)
from tests.conftest import semicircle_cdf
from utils.exceptions import CollisionError


@pytest.fixture
def three():
    return Sample(np.array([-1.0, 0.0, 1.0]), 0, 0, 0)


def test_stieltjes_emp(three):
    assert stieltjes_emp(three, 1j) == pytest.approx(2j / 3)
    # s'(z) = (1/N) Σ (λ − z)^{-2}
    expected = np.mean(1.0 / (np.array([-1.0, 0.0, 1.0]) - 1j) ** 2)
    assert stieltjes_emp(three, 1j, order=1) == pytest.approx(expected)


def test_stieltjes_emp_matrix_input(three):
    lam = np.vstack([three.lambdas, three.lambdas + 1])
    values = stieltjes_emp(lam, 1j)
    assert values.shape == (2,)
    assert values[0] == pytest.approx(2j / 3)


def test_collision(three):
    with pytest.raises(CollisionError):
        stieltjes_emp(three, 0.0)
    with pytest.raises(ValueError):
        stieltjes_emp(three, 1j, order=3)


def test_count_interval(three):
    assert count_interval(three, -0.5, 1.0) == 2
    assert count_interval(three, -np.inf, np.inf) == 3
    assert count_interval(three, 2.0, 1.0) == 0
    lam = np.vstack([three.lambdas, three.lambdas + 0.25])
    np.testing.assert_array_equal(count_interval(lam, -0.5, 0.5), [1, 1])


def test_rescaled_points(three):
    points = rescaled_points(three, 0.1, 0.5, window=3)
    np.testing.assert_allclose(points, [-1.1 / 0.5, -0.1 / 0.5, 0.9 / 0.5])
    assert len(rescaled_points(three, 0.1, 0.5, window=1)) == 1
    with pytest.raises(ValueError):
        rescaled_points(three, 0.0, 0.0)


def test_log_char_counts_eigenvalues_above(three, semicircle):
    E = 0.5
    value = log_char(three, semicircle, E)
    assert value.im == pytest.approx(np.pi * 1 - 3 * np.pi * (1 - float(semicircle_cdf(E))), abs=1e-7)
    # Re: Σ log|E − λ| − 3(E²/4 − 1/2)
    expected_re = np.sum(np.log(np.abs(E - three.lambdas))) - 3 * (E * E / 4 - 0.5)
    assert value.re == pytest.approx(expected_re, abs=1e-7)
    assert value.at == E


def test_log_char_batch_shape(gue_small, semicircle):
    values = log_char_batch(gue_small.matrix()[:5], semicircle, 0.3 + 0.1j)
    assert values.shape == (5,)
    assert np.all(np.isfinite(values))


def test_log_field_derivative(three, semicircle):
    z = 0.2 + 0.3j
    derivative = log_field_derivative(three, semicircle, z)
    # d/dz L = −N (s_N(z) − m_V(z))
    expected = -3 * (stieltjes_emp(three, z) - complex(semicircle.stieltjes(z)))
    assert derivative == pytest.approx(expected, abs=1e-6)


def test_linear_stat(three, semicircle):
    assert linear_stat(three, semicircle, lambda x: x) == pytest.approx(0.0, abs=1e-10)
    # Σλ² − N ∫x² dμ = 2 − 3
    assert linear_stat(three, semicircle, np.square) == pytest.approx(-1.0, abs=1e-9)


def test_displacement_at_quantile(semicircle):
    N = 8
    gamma = semicircle.quantiles(N)
    lam = np.array(gamma)
    lam[-1] = gamma[-1] + 0.1
    assert displacement(lam, semicircle, 4, 2.0) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        displacement(lam, semicircle, 0, 2.0)


def test_f_kernel(three):
    z, w = 0.3 + 1j, -0.2 + 0.5j
    lam = three.lambdas
    assert f_kernel(three, z, w) == pytest.approx(np.mean(1 / ((lam - z) * (lam - w) ** 2)))
    assert f_kernel(three, z, z) == pytest.approx(np.mean(1 / (lam - z) ** 3))


def test_loop_observables_quadratic(three, semicircle):
    z = 0.4 + 0.6j
    values = loop_observables(three, semicircle, z, 1j)
    s = stieltjes_emp(three, z)
    # V' = x 时差商恒为 1，h ≡ 1
    assert values.Delta == pytest.approx(0.0, abs=1e-10)
    assert values.P == pytest.approx(s * s + z * s + 1.0, abs=1e-10)


def test_loop_residual_single_particle(quadratic):
    # N = 1, β = 2：s² + λ/(λ−z) 的期望为 0，单点值按定义核对
    lam = np.array([[0.7]])
    z = 1j
    expected = (1 / (0.7 - z)) ** 2 + 0.7 / (0.7 - z)
    assert loop_residual_rank1(lam, quadratic, 2.0, z)[0] == pytest.approx(expected)


def test_loop_residual_rankn_reduces(three, quadratic):
    z, w = 0.1 + 1j, 0.5 + 2j
    base = loop_residual_rank1(three, quadratic, 1.0, z)
    combined = loop_residual_rankn(three, quadratic, 1.0, z, [w])
    expected = base * stieltjes_emp(three, w) + 2.0 / (9 * 1.0) * f_kernel(three, z, w)
    assert combined == pytest.approx(expected)


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
def test_loop_residual_equals_rewritten_form(gue_small, quartic_measure, beta):
    # (1/N) Σ V'(λ)/(λ−z) = V'(z) s(z) + h(z) + Δ(z)，故 R_1 = P + Δ − (1/N)(1 − 2/β) s'(z)
    z = 0.3 + 0.4j
    for sample in gue_small.samples[:20]:
        lam = sample.lambdas
        values = loop_observables(sample, quartic_measure, z, 1j)
        ds = np.mean(1.0 / (lam - z) ** 2)
        expected = values.P + values.Delta - (1.0 - 2.0 / beta) * ds / len(lam)
        direct = loop_residual_rank1(sample, quartic_measure.potential, beta, z)
        assert direct == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_f_kernel_continuous_at_diagonal(three):
    z = 0.3 + 1j
    diagonal = f_kernel(three, z, z)
    for eps in (1e-3, 1e-6, 1e-9, 1e-11):
        for direction in (1.0, 1j, -1.0 + 1j):
            w = z + eps * direction
            # |λ − z| >= 1，故 |∂_w f| 约不超过 2
            assert abs(f_kernel(three, z, w) - diagonal) <= 4 * eps
