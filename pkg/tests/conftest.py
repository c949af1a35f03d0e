"""
共享测试夹具
"""
import numpy as np
import pytest

from models.ensemble import EnsembleConfig, MCMCSettings, SamplerMethod
from services.equilibrium import solve_equilibrium
from services.potential import builtin_quadratic, builtin_quartic
from services.sampler import run_chains


def semicircle_cdf(x):
    """[−2, 2] 上半圆律的分布函数"""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi


@pytest.fixture(scope="session")
def quadratic():
    return builtin_quadratic()


@pytest.fixture(scope="session")
def quartic():
    return builtin_quartic(0.0)


@pytest.fixture(scope="session")
def semicircle(quadratic):
    return solve_equilibrium(quadratic)


@pytest.fixture(scope="session")
def quartic_measure(quartic):
    return solve_equilibrium(quartic)


@pytest.fixture(scope="session")
def gue_small(quadratic):
    """β=2, N=32 的三对角样本（4 条链 × 100）"""
    config = EnsembleConfig(beta=2.0, N=32, potential=quadratic)
    return run_chains(config, n_chains=4, n_samples_per_chain=100, seed=11)


@pytest.fixture
def mala_config(quadratic):
    def build(beta=2.0, N=4, burn_in=200, thinning=5, potential=None):
        return EnsembleConfig(
            beta=beta,
            N=N,
            potential=potential or quadratic,
            method=SamplerMethod.MALA,
            mcmc=MCMCSettings(burn_in_sweeps=burn_in, thinning_sweeps=thinning),
        )

    return build
