#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
性能优化模块
提供内存缓存（包络采样、F_λ 采样的记忆化）和线程池并行映射
"""

import time
import hashlib
import threading
from typing import Dict, Any, Optional, List, Callable, Iterable, TypeVar
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .logging_system import get_structlog_logger

T = TypeVar("T")
R = TypeVar("R")

logger = get_structlog_logger(__name__)


def fingerprint(*parts: Any) -> str:
    """
    生成缓存键：数组按原始字节参与哈希，其余对象按 repr

    Args:
        *parts: 参与哈希的对象

    Returns:
        md5 十六进制摘要
    """
    digest = hashlib.md5()
    for part in parts:
        if isinstance(part, np.ndarray):
            digest.update(str(part.dtype).encode())
            digest.update(str(part.shape).encode())
            digest.update(np.ascontiguousarray(part).tobytes())
        else:
            digest.update(repr(part).encode())
        digest.update(b"|")
    return digest.hexdigest()


@dataclass
class CacheEntry:
    """缓存条目"""
    key: str
    value: Any
    created_at: float
    hit_count: int = 0
    last_accessed: float = 0.0


class CacheManager:
    """缓存管理器（线程安全，LRU 淘汰）"""

    def __init__(self, max_size: int = 256, name: str = "cache"):
        """
        初始化缓存管理器

        Args:
            max_size: 最大缓存条目数
            name: 缓存名称（仅用于日志）
        """
        self.max_size = max_size
        self.name = name
        self.memory_cache: Dict[str, CacheEntry] = {}
        self.lock = threading.RLock()
        self.stats = {
            'hits': 0,
            'misses': 0,
            'evictions': 0,
            'size': 0
        }

    def _evict_if_needed(self) -> None:
        """缓存满时淘汰最久未访问的 20% 条目"""
        with self.lock:
            if len(self.memory_cache) < self.max_size:
                return
            sorted_entries = sorted(
                self.memory_cache.values(),
                key=lambda x: x.last_accessed or x.created_at
            )
            evict_count = max(1, int(self.max_size * 0.2))
            for entry in sorted_entries[:evict_count]:
                del self.memory_cache[entry.key]
            self.stats['evictions'] += evict_count
            self.stats['size'] = len(self.memory_cache)
            logger.debug("cache_evicted", cache=self.name, count=evict_count)

    def get(self, key: str) -> Optional[Any]:
        """
        获取缓存值

        Args:
            key: 缓存键

        Returns:
            缓存值，不存在时返回None
        """
        with self.lock:
            entry = self.memory_cache.get(key)
            if entry is None:
                self.stats['misses'] += 1
                return None
            entry.hit_count += 1
            entry.last_accessed = time.monotonic()
            self.stats['hits'] += 1
            return entry.value

    def set(self, key: str, value: Any) -> None:
        """设置缓存值"""
        with self.lock:
            if key not in self.memory_cache:
                self._evict_if_needed()
            now = time.monotonic()
            self.memory_cache[key] = CacheEntry(key=key, value=value, created_at=now, last_accessed=now)
            self.stats['size'] = len(self.memory_cache)

    def delete(self, key: str) -> bool:
        """删除缓存条目"""
        with self.lock:
            if key in self.memory_cache:
                del self.memory_cache[key]
                self.stats['size'] = len(self.memory_cache)
                return True
            return False

    def clear(self) -> None:
        """清空缓存"""
        with self.lock:
            self.memory_cache.clear()
            self.stats['size'] = 0

    def get_or_compute(self, key: str, compute: Callable[[], T]) -> T:
        """
        命中则返回缓存值，否则计算并写入

        计算过程不持锁；并发的相同请求可能各算一次，结果相同
        """
        value = self.get(key)
        if value is not None:
            return value
        value = compute()
        self.set(key, value)
        return value

    def get_stats(self) -> Dict[str, Any]:
        """获取缓存统计信息"""
        with self.lock:
            total = self.stats['hits'] + self.stats['misses']
            return {
                **self.stats,
                'hit_rate': self.stats['hits'] / total if total > 0 else 0,
                'max_size': self.max_size
            }


def parallel_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """
    线程池并行映射，结果顺序与输入一致

    Args:
        func: 作用在每个元素上的函数
        items: 输入序列
        max_workers: 线程数；None 取配置中的 parallel.max_workers，<=1 时串行执行

    Returns:
        结果列表
    """
    items = list(items)
    if max_workers is None:
        from .config import get_settings
        max_workers = get_settings().parallel.max_workers
    if max_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(max_workers, len(items))) as executor:
        return list(executor.map(func, items))


# 全局实例：包络采样缓存
_default_cache_manager: Optional[CacheManager] = None


def get_default_cache_manager() -> CacheManager:
    """获取默认的缓存管理器"""
    global _default_cache_manager
    if _default_cache_manager is None:
        _default_cache_manager = CacheManager(max_size=512, name="envelope-samples")
    return _default_cache_manager
