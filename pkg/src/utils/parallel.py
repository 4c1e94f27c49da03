"""任务池并行."""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from loguru import logger

from src.config.settings import settings

T = TypeVar("T")
R = TypeVar("R")


def run_tasks(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """对每个任务执行 fn，结果按任务顺序返回.

    workers 为 1 时串行执行；否则使用进程池。fn 必须是模块级函数，
    任务参数必须可 pickle。串行与并行的结果完全一致。

    Args:
        fn: 任务函数
        tasks: 任务参数序列
        workers: 进程数，默认取配置 LAB_WORKERS

    Returns:
        与 tasks 等长、顺序一致的结果列表
    """
    workers = settings.runner.workers if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    logger.debug(f"并行执行 {len(tasks)} 个任务，进程数：{workers}")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
