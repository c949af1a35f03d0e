"""
实验注册表
管理所有可用的实验
"""
from typing import Dict, List, Optional

from services.experiments.base import BaseExperiment
from utils.logger import get_logger

logger = get_logger(__name__)


class ExperimentRegistry:
    """
    实验注册表

    使用类方法实现全局单例模式
    """

    _experiments: Dict[str, BaseExperiment] = {}
    _initialized: bool = False

    @classmethod
    def register(cls, experiment: BaseExperiment) -> None:
        """
        注册实验

        Args:
            experiment: 实验实例
        """
        if experiment.experiment_id in cls._experiments:
            logger.warning(f"实验 {experiment.experiment_id} 已存在，将被覆盖")

        cls._experiments[experiment.experiment_id] = experiment
        logger.debug(f"已注册实验: {experiment.experiment_id} ({experiment.experiment_name})")

    @classmethod
    def get(cls, experiment_id: str) -> Optional[BaseExperiment]:
        """
        获取指定实验

        Args:
            experiment_id: 实验ID

        Returns:
            实验实例，不存在则返回 None
        """
        cls.ensure_builtin()
        return cls._experiments.get(experiment_id)

    @classmethod
    def get_all(cls) -> List[BaseExperiment]:
        cls.ensure_builtin()
        return list(cls._experiments.values())

    @classmethod
    def get_experiment_ids(cls) -> List[str]:
        cls.ensure_builtin()
        return list(cls._experiments.keys())

    @classmethod
    def ensure_builtin(cls) -> None:
        """首次使用时注册内置实验"""
        if cls._initialized:
            return
        cls._initialized = True

        from services.experiments.clt import clt_experiment
        from services.experiments.edge_tail import edge_tail_experiment
        from services.experiments.gustavsson import gustavsson_experiment
        from services.experiments.local_law import local_law_experiment
        from services.experiments.loops import loops_experiment
        from services.experiments.rigidity import rigidity_experiment
        from services.experiments.smooth_clt import smooth_clt_experiment
        from services.experiments.wegner import wegner_experiment

        for experiment in (
            loops_experiment,
            local_law_experiment,
            rigidity_experiment,
            edge_tail_experiment,
            wegner_experiment,
            clt_experiment,
            gustavsson_experiment,
            smooth_clt_experiment,
        ):
            cls.register(experiment)
        logger.debug(f"实验系统初始化完成，共 {len(cls._experiments)} 个实验")


# 全局注册表实例
registry = ExperimentRegistry()
