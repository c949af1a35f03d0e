"""
随机数流
基于 Philox 计数器生成器，按 (seed, chain_id) 派生互相独立的流
"""
import numpy as np

SEED_MASK = (1 << 64) - 1


def stream_key(seed: int, chain_id: int) -> tuple:
    """流标识（写入缓存元数据，用于复现）"""
    return (int(seed) & SEED_MASK, int(chain_id))


def make_generator(seed: int, chain_id: int = 0) -> np.random.Generator:
    """
    创建第 chain_id 条链的随机数生成器

    结果只依赖 (seed, chain_id)，与线程调度无关

    Args:
        seed: 64 位种子
        chain_id: 链编号

    Returns:
        numpy Generator
    """
    entropy = np.random.SeedSequence(list(stream_key(seed, chain_id)))
    return np.random.Generator(np.random.Philox(entropy))
