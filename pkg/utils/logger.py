"""
日志工具
"""
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from config import LOG_LEVEL, LOG_FILE

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[name]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[name]}:{function}:{line} - {message}"

logger.configure(extra={"name": "loggas"})


def setup_logger(level: str = LOG_LEVEL, log_file: Optional[str] = LOG_FILE, quiet: bool = False):
    """
    配置日志系统

    Args:
        level: 日志级别
        log_file: 日志文件路径，为 None 时不写文件
        quiet: 安静模式，控制台只输出 WARNING 及以上

    Returns:
        loguru 日志实例
    """
    logger.remove()  # 移除默认处理器

    # 控制台输出（stderr，stdout 留给 JSON 结果）
    logger.add(
        sys.stderr,
        format=CONSOLE_FORMAT,
        level="WARNING" if quiet else level,
        colorize=True,
    )

    # 文件输出
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_path,
            format=FILE_FORMAT,
            level=level,
            rotation="10 MB",  # 文件大小超过10MB时轮转
            retention="30 days",  # 保留30天
            compression="zip",  # 压缩旧日志
            encoding="utf-8",
        )

    return logger


def get_logger(name: Optional[str] = None):
    """
    获取日志记录器

    Args:
        name: 日志记录器名称

    Returns:
        日志记录器实例
    """
    if name:
        return logger.bind(name=name)
    return logger
