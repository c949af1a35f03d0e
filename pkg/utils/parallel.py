"""
并行执行工具
有界线程池，结果按输入顺序返回
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def run_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    并行映射

    Args:
        fn: 纯函数
        items: 输入序列
        threads: 线程数，<= 1 时在当前线程顺序执行

    Returns:
        与输入同序的结果列表
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
