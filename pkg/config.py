"""
配置文件
从环境变量读取配置，提供统一的配置访问
"""
import os
from pathlib import Path
from typing import List, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

# 项目根目录
BASE_DIR = Path(__file__).parent


class Settings(BaseSettings):
    """环境变量配置（前缀 LOGGAS_）"""

    model_config = SettingsConfigDict(
        env_prefix="LOGGAS_",
        env_file=".env",
        extra="ignore",
    )

    # 并行度，0 表示自动（CPU 核数）
    threads: int = 0
    log_level: str = "INFO"
    log_file: Optional[str] = None
    data_dir: str = str(BASE_DIR / "data")
    cache_dir: Optional[str] = None
    output_dir: str = "out"


settings = Settings()

# ============================================
# 运行配置
# ============================================
THREADS: int = settings.threads
DATA_DIR: str = settings.data_dir
CACHE_DIR: Optional[str] = settings.cache_dir
OUTPUT_DIR: str = settings.output_dir

# ============================================
# 日志配置
# ============================================
LOG_LEVEL: str = settings.log_level
LOG_FILE: str = settings.log_file or f"{DATA_DIR}/logs/loggas.log"


def resolve_threads(cli_threads: Optional[int] = None, config_threads: int = 0) -> int:
    """
    解析最终使用的线程数

    优先级：--threads > LOGGAS_THREADS > 运行配置中的 threads > 自动

    Args:
        cli_threads: 命令行参数
        config_threads: 运行配置中的值

    Returns:
        正整数线程数
    """
    for value in (cli_threads, THREADS, config_threads):
        if value:
            return int(value)
    return os.cpu_count() or 1


class Config:
    """配置管理类"""

    @staticmethod
    def validate() -> List[str]:
        """验证配置项，返回问题列表（为空表示通过）"""
        errors = []

        if THREADS < 0:
            errors.append("LOGGAS_THREADS 不能为负数")
        if LOG_LEVEL.upper() not in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"}:
            errors.append(f"LOGGAS_LOG_LEVEL 无效: {LOG_LEVEL}")

        return errors

    @staticmethod
    def describe() -> None:
        """记录当前生效的配置"""
        from utils.logger import get_logger

        log = get_logger(__name__)
        log.info("=" * 50)
        log.info("loggas 配置")
        log.info(f"  线程数: {THREADS or '自动'}")
        log.info(f"  数据目录: {DATA_DIR}")
        log.info(f"  缓存目录: {CACHE_DIR or '未设置'}")
        log.info(f"  输出目录: {OUTPUT_DIR}")
        log.info(f"  日志: {LOG_LEVEL} -> {LOG_FILE}")
        log.info("=" * 50)
