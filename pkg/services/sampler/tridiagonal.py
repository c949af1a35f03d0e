"""
三对角矩阵模型
对角元 ~ Normal(0, 2/(βN))，次对角元 ~ χ_{β(N−k)} / √(βN)，k = 1..N−1
特征值服从 V(x) = x²/2 的 β-系综
"""
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from models.ensemble import Sample
from utils.exceptions import SamplerError


def tridiagonal_matrix(beta: float, N: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    生成随机三对角矩阵

    χ 变量由 Gamma(β(N−k)/2, scale=2) 开方得到

    Args:
        beta: β > 0
        N: 阶数
        rng: 随机数生成器

    Returns:
        (对角元, 次对角元)
    """
    if beta <= 0:
        raise ValueError(f"beta 必须为正: {beta}")
    if N < 1:
        raise ValueError(f"N 必须为正: {N}")
    diag = rng.normal(0.0, np.sqrt(2.0 / (beta * N)), size=N)
    k = np.arange(1, N)
    off = np.sqrt(rng.gamma(shape=beta * (N - k) / 2.0, scale=2.0)) / np.sqrt(beta * N)
    return diag, off


def sample_tridiagonal(
    beta: float,
    N: int,
    rng: np.random.Generator,
    seed: int = 0,
    chain_id: int = 0,
    sweep_index: int = 0,
) -> Sample:
    """
    三对角模型抽取一个构型

    Args:
        beta: β > 0
        N: 粒子数
        rng: 随机数生成器
        seed: 记录在样本中的种子
        chain_id: 链编号
        sweep_index: 样本序号

    Returns:
        Sample（特征值升序）
    """
    diag, off = tridiagonal_matrix(beta, N, rng)
    if N == 1:
        eigenvalues = diag.copy()
    else:
        try:
            eigenvalues = eigh_tridiagonal(diag, off, eigvals_only=True)
        except (LinAlgError, ValueError) as e:
            raise SamplerError(f"三对角特征值求解失败: {e}", chain_id) from e

    sample = Sample(np.sort(eigenvalues), int(seed), int(chain_id), int(sweep_index))
    if not sample.is_valid():
        raise SamplerError("三对角特征值出现重根或非有限值", chain_id)
    return sample
