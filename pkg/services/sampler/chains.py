"""
多链运行
每条链的随机流由 (seed, chain_id) 派生，结果与线程数无关
"""
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

import numpy as np

from models.ensemble import EnsembleConfig, Sample, SampleSet, SamplerMethod
from services.equilibrium import EquilibriumMeasure, solve_equilibrium
from services.sampler.mala import MALAChain
from services.sampler.tridiagonal import sample_tridiagonal
from utils.exceptions import LoggasError, SamplerError
from utils.logger import get_logger
from utils.parallel import run_ordered
from utils.rng import make_generator

if TYPE_CHECKING:
    from database.sample_cache import SampleCache

logger = get_logger(__name__)


def _run_one_chain(
    config: EnsembleConfig,
    chain_id: int,
    n_samples: int,
    seed: int,
    measure: Optional[EquilibriumMeasure],
) -> Tuple[List[Sample], Dict[str, Any]]:
    rng = make_generator(seed, chain_id)
    try:
        if config.method == SamplerMethod.TRIDIAGONAL:
            samples = [
                sample_tridiagonal(config.beta, config.N, rng, seed=seed, chain_id=chain_id, sweep_index=i)
                for i in range(n_samples)
            ]
            return samples, {}

        chain = MALAChain(config, rng, measure=measure, seed=seed, chain_id=chain_id)
        samples = list(chain.stream(n_samples))
        stats = {
            "acceptance_rate": chain.stats.acceptance_rate,
            "step_size": chain.stats.step_size,
            "rejected_invalid": chain.stats.rejected_invalid,
        }
        return samples, stats
    except SamplerError:
        raise
    except (LoggasError, ValueError, FloatingPointError) as e:
        raise SamplerError(str(e), chain_id) from e


def run_chains(
    config: EnsembleConfig,
    n_chains: int,
    n_samples_per_chain: int,
    seed: int,
    threads: int = 1,
    measure: Optional[EquilibriumMeasure] = None,
    cache: Optional["SampleCache"] = None,
) -> SampleSet:
    """
    独立运行多条链

    Args:
        config: 系综配置
        n_chains: 链数（>= 1）
        n_samples_per_chain: 每条链的样本数（>= 1）
        seed: 64 位种子
        threads: 线程数
        measure: 已求解的平衡测度（MALA 热启动用，缺省时求解一次）
        cache: 样本缓存，命中时不采样

    Returns:
        按 (chain_id, sweep_index) 排序的 SampleSet
    """
    if n_chains < 1:
        raise ValueError(f"n_chains 必须不小于 1: {n_chains}")
    if n_samples_per_chain < 1:
        raise ValueError(f"n_samples_per_chain 必须不小于 1: {n_samples_per_chain}")

    if cache is not None:
        hit = cache.load(config, n_chains, n_samples_per_chain, seed)
        if hit is not None:
            return hit

    if config.method == SamplerMethod.MALA and measure is None:
        measure = solve_equilibrium(config.potential)

    logger.info(
        f"开始采样: {config.method.value} beta={config.beta:g} N={config.N} "
        f"{config.potential.label()} chains={n_chains} samples={n_samples_per_chain} seed={seed}"
    )
    results = run_ordered(
        lambda chain_id: _run_one_chain(config, chain_id, n_samples_per_chain, seed, measure),
        range(n_chains),
        threads=threads,
    )

    samples: List[Sample] = []
    chain_stats: List[Dict[str, Any]] = []
    for chain_id, (chain_samples, stats) in enumerate(results):
        samples.extend(chain_samples)
        if stats:
            chain_stats.append({"chain_id": chain_id, **stats})

    diagnostics: Dict[str, Any] = {}
    if chain_stats:
        diagnostics["chains"] = chain_stats
        diagnostics["mean_acceptance"] = float(np.mean([s["acceptance_rate"] for s in chain_stats]))
        logger.info(f"MALA 平均接受率: {diagnostics['mean_acceptance']:.3f}")

    sample_set = SampleSet(
        config=config,
        samples=samples,
        rng_stream_ids=list(range(n_chains)),
        diagnostics=diagnostics,
    )
    logger.info(f"采样完成: {sample_set!r}")

    if cache is not None:
        cache.store(sample_set, n_chains, n_samples_per_chain, seed)
    return sample_set
