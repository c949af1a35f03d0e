"""
统计工具
均值的标准误（独立样本 / 分链批均值）、有效样本量、Wilson 区间、矩检验、对数拟合
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Estimate:
    """蒙特卡洛均值估计"""

    mean: float
    stderr: float
    n: int


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    """FFT 计算归一化自相关函数"""
    n = len(x)
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n] / n
    if acov[0] <= 0:
        return np.ones(1)
    return acov / acov[0]


def integrated_autocorr_time(x: Sequence[float]) -> float:
    """
    积分自相关时间（Geyer 初始正序列截断）

    Args:
        x: 单条链的序列

    Returns:
        τ >= 1
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 4:
        return 1.0
    rho = _autocorrelation(x)
    tau = 1.0
    # 相邻两项之和为正时累加
    for k in range(1, len(rho) - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return max(tau, 1.0)


def effective_sample_size(chains: Sequence[Sequence[float]]) -> float:
    """多条链的有效样本量（各链 n/τ 之和）"""
    total = 0.0
    for chain in chains:
        chain = np.asarray(chain, dtype=float)
        if len(chain) == 0:
            continue
        total += len(chain) / integrated_autocorr_time(chain)
    return total


def batch_length(chains: Sequence[Sequence[float]], min_batch: int = 20) -> int:
    """批长度：max(min_batch, ⌈2τ⌉)，τ 取各链最大值"""
    taus = [integrated_autocorr_time(c) for c in chains if len(c) >= 4]
    tau = max(taus) if taus else 1.0
    return max(min_batch, int(np.ceil(2.0 * tau)))


def estimate_mean(
    chains: Sequence[Sequence[float]],
    iid: bool = True,
    min_batch: int = 20,
) -> Estimate:
    """
    估计均值及其标准误

    独立样本用样本方差；MCMC 样本在每条链内部分批，用全部批均值的方差

    Args:
        chains: 按链分组的实数序列
        iid: 是否为独立样本
        min_batch: 最小批长度

    Returns:
        Estimate
    """
    arrays = [np.asarray(c, dtype=float) for c in chains if len(c) > 0]
    values = np.concatenate(arrays) if arrays else np.zeros(0)
    n = len(values)
    if n == 0:
        return Estimate(float("nan"), float("nan"), 0)
    mean = float(np.mean(values))
    if n == 1:
        return Estimate(mean, float("nan"), 1)

    if iid:
        return Estimate(mean, float(np.std(values, ddof=1) / np.sqrt(n)), n)

    b = batch_length(arrays, min_batch)
    batch_means: List[float] = []
    for chain in arrays:
        n_batches = len(chain) // b
        if n_batches:
            batch_means.extend(chain[: n_batches * b].reshape(n_batches, b).mean(axis=1))
    if len(batch_means) < 2:
        # 链太短时退化为链均值之间的离散度
        chain_means = [c.mean() for c in arrays]
        if len(chain_means) >= 2:
            return Estimate(mean, float(np.std(chain_means, ddof=1) / np.sqrt(len(chain_means))), n)
        return Estimate(mean, float(np.std(values, ddof=1) / np.sqrt(n)), n)

    batch_means = np.asarray(batch_means)
    return Estimate(mean, float(np.std(batch_means, ddof=1) / np.sqrt(len(batch_means))), n)


def split_by_chain(values: np.ndarray, chain_ids: Sequence[int]) -> List[np.ndarray]:
    """按链编号分组，保持链内顺序"""
    chain_ids = np.asarray(chain_ids)
    return [values[chain_ids == c] for c in np.unique(chain_ids)]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """二项比例的 Wilson 得分区间"""
    if trials == 0:
        return 0.0, 1.0
    z = stats.norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


def moment_z_scores(x: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """偏度、峰度 z 检验统计量（样本太少时返回 None）"""
    x = np.asarray(x, dtype=float)
    skew = float(stats.skewtest(x).statistic) if len(x) >= 8 else None
    kurt = float(stats.kurtosistest(x).statistic) if len(x) >= 20 else None
    return skew, kurt


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """
    log y 对 log x 的最小二乘斜率

    Returns:
        (斜率, 斜率标准误)
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if len(lx) < 5:
        # numpy 的协方差估计需要至少 5 个点
        slope = float(np.polyfit(lx, ly, 1)[0])
        return slope, float("nan")
    coeffs, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coeffs[0]), float(np.sqrt(cov[0, 0]))
