"""
Metropolis 修正的 Langevin 采样（MALA）
目标：log π = β Σ_{i<j} log|λ_i−λ_j| − (βN/2) Σ V(λ_k)
每次扫描对全部坐标做一次联合提议；目标密度关于坐标置换对称，
链在 R^N 上运行，产出样本时再排序
"""
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from models.ensemble import EnsembleConfig, Sample, SamplerMethod
from services.equilibrium import EquilibriumMeasure, solve_equilibrium
from services.potential import evaluate
from utils.exceptions import SamplerError
from utils.logger import get_logger

logger = get_logger(__name__)

TARGET_ACCEPTANCE = 0.55
MIN_ACCEPTANCE = 0.05
# 接受率检查前至少需要的预烧后扫描数
MIN_SWEEPS_FOR_CHECK = 100


@dataclass
class ChainStats:
    """单条链的运行统计"""

    chain_id: int
    step_size: float
    proposals: int = 0
    accepted: int = 0
    rejected_invalid: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else float("nan")


def default_step_size(beta: float, N: int) -> float:
    """初始步长：与 N^{-7/6} β^{-1/2} 同阶（批内间距尺度）"""
    return 0.5 / (np.sqrt(beta) * N ** (7.0 / 6.0))


def log_density_and_grad(config: EnsembleConfig, x: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    非归一化对数密度及其梯度

    梯度第 k 分量：β Σ_{j≠k} 1/(λ_k−λ_j) − (βN/2) V'(λ_k)

    Returns:
        (log π, ∇ log π)；出现重合点时 log π = −inf
    """
    beta, N = config.beta, len(x)
    confinement = 0.5 * beta * N
    log_pi = -confinement * float(np.sum(evaluate(config.potential, x, 0)))
    grad = -confinement * evaluate(config.potential, x, 1)
    if N == 1:
        return log_pi, grad

    diff = x[:, None] - x[None, :]
    off = ~np.eye(N, dtype=bool)
    gaps = np.abs(diff[off])
    if np.any(gaps == 0):
        return float("-inf"), np.full(N, np.nan)
    # 每对出现两次
    log_pi += 0.5 * beta * float(np.sum(np.log(gaps)))
    inv = np.zeros_like(diff)
    inv[off] = 1.0 / diff[off]
    grad = grad + beta * inv.sum(axis=1)
    return log_pi, grad


class MALAChain:
    """
    一条 MALA 链

    预烧期间按 Robbins-Monro 调整 log 步长使接受率趋向 TARGET_ACCEPTANCE，
    预烧结束后步长冻结
    """

    def __init__(
        self,
        config: EnsembleConfig,
        rng: np.random.Generator,
        state: Optional[Sample] = None,
        measure: Optional[EquilibriumMeasure] = None,
        seed: int = 0,
        chain_id: int = 0,
    ):
        if config.method != SamplerMethod.MALA:
            raise ValueError(f"MALA 链需要 method=mala，当前为 {config.method.value}")
        self.config = config
        self.rng = rng
        self.seed = int(seed)
        self.chain_id = int(chain_id)

        if state is not None:
            if state.N != config.N or not state.is_valid():
                raise ValueError("初始状态与配置不符或不是严格递增的有限向量")
            x = np.array(state.lambdas, dtype=float)
        else:
            measure = measure or solve_equilibrium(config.potential)
            x = np.array(measure.quantiles(config.N), dtype=float)

        self.x = x
        self.log_pi, self.grad = log_density_and_grad(config, x)
        if not np.isfinite(self.log_pi) or not np.all(np.isfinite(self.grad)):
            raise SamplerError("初始状态的能量或梯度非有限", self.chain_id)

        step = config.mcmc.step_size or default_step_size(config.beta, config.N)
        self.stats = ChainStats(chain_id=self.chain_id, step_size=float(step))
        self.sweeps = 0

    @property
    def step_size(self) -> float:
        return self.stats.step_size

    def sweep(self) -> float:
        """
        一次联合提议

        Returns:
            接受概率 min(1, α)
        """
        eps = self.stats.step_size
        x, grad = self.x, self.grad
        mean_forward = x + 0.5 * eps * eps * grad
        y = mean_forward + eps * self.rng.standard_normal(len(x))
        self.sweeps += 1
        self.stats.proposals += 1

        if not np.all(np.isfinite(y)):
            self.stats.rejected_invalid += 1
            return 0.0
        log_pi_y, grad_y = log_density_and_grad(self.config, y)
        if not np.isfinite(log_pi_y) or not np.all(np.isfinite(grad_y)):
            self.stats.rejected_invalid += 1
            return 0.0

        mean_backward = y + 0.5 * eps * eps * grad_y
        log_q_forward = -np.sum((y - mean_forward) ** 2) / (2 * eps * eps)
        log_q_backward = -np.sum((x - mean_backward) ** 2) / (2 * eps * eps)
        log_alpha = log_pi_y - self.log_pi + log_q_backward - log_q_forward
        accept_prob = float(np.exp(min(0.0, log_alpha)))

        if np.log(self.rng.uniform()) < log_alpha:
            self.x, self.log_pi, self.grad = y, log_pi_y, grad_y
            self.stats.accepted += 1
        return accept_prob

    def burn_in(self) -> None:
        """预烧并（可选）自适应步长，结束后清零计数"""
        settings = self.config.mcmc
        log_eps = np.log(self.stats.step_size)
        for t in range(settings.burn_in_sweeps):
            prob = self.sweep()
            if settings.adapt:
                log_eps += (prob - TARGET_ACCEPTANCE) / (t + 1) ** 0.6
                self.stats.step_size = float(np.exp(log_eps))
        logger.debug(
            f"[chain {self.chain_id}] 预烧完成: sweeps={settings.burn_in_sweeps}, "
            f"step={self.stats.step_size:.3e}, acceptance={self.stats.acceptance_rate:.3f}"
        )
        self.stats.proposals = 0
        self.stats.accepted = 0
        self.stats.rejected_invalid = 0

    def check_acceptance(self) -> None:
        if self.stats.proposals >= MIN_SWEEPS_FOR_CHECK and self.stats.acceptance_rate < MIN_ACCEPTANCE:
            raise SamplerError(
                f"接受率过低: {self.stats.acceptance_rate:.4f} (step={self.stats.step_size:.3e})",
                self.chain_id,
            )

    def stream(self, n_samples: int) -> Iterator[Sample]:
        """
        预烧后每隔 thinning_sweeps 次扫描产出一个样本

        Args:
            n_samples: 样本数

        Yields:
            Sample
        """
        settings = self.config.mcmc
        self.burn_in()
        for _ in range(n_samples):
            for _ in range(settings.thinning_sweeps):
                self.sweep()
            self.check_acceptance()
            yield Sample(np.sort(self.x), self.seed, self.chain_id, self.sweeps)


def sample_mala(
    config: EnsembleConfig,
    rng: np.random.Generator,
    state: Optional[Sample] = None,
    n_samples: int = 1,
    measure: Optional[EquilibriumMeasure] = None,
    seed: int = 0,
    chain_id: int = 0,
) -> Iterator[Sample]:
    """
    MALA 样本流

    Args:
        config: method=mala 的系综配置
        rng: 随机数生成器
        state: 初始状态，缺省时从经典位置 γ_k 出发
        n_samples: 样本数
        measure: 已求解的平衡测度（用于热启动）
        seed: 记录在样本中的种子
        chain_id: 链编号

    Yields:
        Sample
    """
    chain = MALAChain(config, rng, state=state, measure=measure, seed=seed, chain_id=chain_id)
    yield from chain.stream(n_samples)
