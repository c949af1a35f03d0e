"""
异常定义
"""
from typing import Optional


class LoggasError(Exception):
    """所有业务异常的基类"""


class ConfigError(LoggasError, ValueError):
    """配置错误（消息中包含出错的键）"""


class PotentialError(LoggasError, ValueError):
    """势函数不满足约束"""


class ConvergenceError(LoggasError):
    """迭代求解未收敛"""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class QuadratureError(LoggasError):
    """数值积分在加密后结果不一致"""

    def __init__(self, message: str, coarse: complex = float("nan"), fine: complex = float("nan")):
        super().__init__(f"{message} (coarse={coarse}, fine={fine})")
        self.coarse = coarse
        self.fine = fine


class SamplerError(LoggasError):
    """采样器错误，带链编号"""

    def __init__(self, message: str, chain_id: Optional[int] = None):
        prefix = f"[chain {chain_id}] " if chain_id is not None else ""
        super().__init__(prefix + message)
        self.chain_id = chain_id


class CollisionError(LoggasError, ValueError):
    """求值点与某个特征值重合"""


class OracleError(LoggasError):
    """精确积分在两种网格下结果不一致"""

    def __init__(self, message: str, coarse: complex, fine: complex):
        super().__init__(f"{message} (grid={coarse}, 2*grid={fine})")
        self.coarse = coarse
        self.fine = fine


class CacheCorruptionError(LoggasError):
    """缓存文件损坏"""


class UnderpoweredError(LoggasError):
    """样本量不足以支撑该实验"""


class ExperimentError(LoggasError):
    """实验参数或输入错误"""


class ReportError(LoggasError):
    """汇总报告错误"""
