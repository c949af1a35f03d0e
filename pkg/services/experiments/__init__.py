"""实验系统"""
from services.experiments.base import BaseExperiment, ExperimentContext
from services.experiments.registry import ExperimentRegistry, registry

__all__ = ["BaseExperiment", "ExperimentContext", "ExperimentRegistry", "registry"]
