"""日志配置模块.

日志只写入 stderr 与输出目录下的日志文件，从不写入实验产物。
"""

import sys
from contextlib import AbstractContextManager
from typing import Optional

from loguru import logger

from src.config.settings import settings


def _add_prefix(record) -> None:
    run = record["extra"].get("run")
    record["extra"]["prefix"] = f"[{run}] " if run else ""


def setup_logger(level: Optional[str] = None) -> None:
    """配置日志系统.

    设置日志格式、级别和输出位置。run_scope 内的日志带上 [实验 seed=…] 前缀。

    Args:
        level: 覆盖配置中的日志级别
    """
    level = level or settings.log.level
    fmt = settings.log.format.replace("{message}", "{extra[prefix]}{message}")

    # 清除默认的日志配置
    logger.remove()
    logger.configure(patcher=_add_prefix)

    # 添加控制台日志处理器
    logger.add(sys.stderr, format=fmt, level=level, colorize=True)

    # 添加文件日志处理器(如果已配置)；进程池中的任务也会写入，需要排队
    if settings.log.log_file:
        logger.add(
            settings.output_dir / settings.log.log_file,
            format=fmt,
            level=level,
            rotation=settings.log.rotation,
            retention=settings.log.retention,
            enqueue=True,
        )

    logger.debug(f"日志系统已初始化，级别：{level}")


def run_scope(experiment: str, seed: int) -> AbstractContextManager:
    """一次实验的日志作用域."""
    return logger.contextualize(run=f"{experiment} seed={seed}")

# 注意：不在模块级别调用setup_logger()，避免重复初始化
# 初始化将在 src/__init__.py 中进行
