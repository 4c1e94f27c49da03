"""随机种子流.

所有随机性都来自 ``numpy.random.SeedSequence(seed, spawn_key=(task,))``，
第 i 个任务的随机流只由 (seed, i) 决定，与进程数无关。
"""

from typing import List

import numpy as np

MAX_SEED = 2**64 - 1


def task_rng(seed: int, task: int = 0) -> np.random.Generator:
    """返回第 task 个任务的独立随机数生成器.

    Args:
        seed: 64 位主种子
        task: 任务序号

    Returns:
        numpy 随机数生成器
    """
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"种子必须在 [0, 2^64) 内: {seed}")
    if task < 0:
        raise ValueError(f"任务序号不能为负: {task}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(task,)))


def task_seeds(seed: int, count: int) -> List[int]:
    """为 count 个子任务派生整数种子（可序列化，便于跨进程传递）."""
    return [int(task_rng(seed, i).integers(0, 2**63)) for i in range(count)]
