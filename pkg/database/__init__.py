"""
持久化模块：样本缓存
"""
from .sample_cache import SampleCache

__all__ = ["SampleCache"]
