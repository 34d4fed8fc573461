"""
Route Cache for the Road Graph
LRU memoisation of single-source shortest-path rows, keyed per time slot
"""

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Dict, Generic, Hashable, List, Optional, Tuple, TypeVar

import numpy as np

K = TypeVar('K', bound=Hashable)
V = TypeVar('V')


@dataclass
class CacheEntry(Generic[V]):
    value: V
    size_bytes: int = 0


class LRUCache(Generic[K, V]):
    def __init__(self, max_size: int = 4096, max_memory_bytes: Optional[int] = None):
        self.max_size = max_size
        self.max_memory_bytes = max_memory_bytes
        self._cache: "OrderedDict[K, CacheEntry[V]]" = OrderedDict()
        self._lock = threading.Lock()
        self._current_memory = 0

        self._hits = 0
        self._misses = 0

    def _estimate_size(self, value: Any) -> int:
        if isinstance(value, np.ndarray):
            return int(value.nbytes)
        if isinstance(value, (list, tuple)):
            return sum(self._estimate_size(v) for v in value)
        if isinstance(value, (int, float, bool)):
            return 8
        return 64

    def get(self, key: K) -> Optional[V]:
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                self._misses += 1
                return None

            self._cache.move_to_end(key)
            self._hits += 1
            return entry.value

    def set(self, key: K, value: V):
        with self._lock:
            size = self._estimate_size(value)

            if key in self._cache:
                old_entry = self._cache.pop(key)
                self._current_memory -= old_entry.size_bytes

            while self._cache and len(self._cache) >= self.max_size:
                self._evict_oldest()

            if self.max_memory_bytes is not None:
                while self._cache and self._current_memory + size > self.max_memory_bytes:
                    self._evict_oldest()

            self._cache[key] = CacheEntry(value=value, size_bytes=size)
            self._current_memory += size

    def _evict_oldest(self):
        _, oldest_entry = self._cache.popitem(last=False)
        self._current_memory -= oldest_entry.size_bytes

    def clear(self):
        with self._lock:
            self._cache.clear()
            self._current_memory = 0

    def __contains__(self, key: K) -> bool:
        with self._lock:
            return key in self._cache

    def __len__(self) -> int:
        return len(self._cache)

    def memory_usage(self) -> int:
        return self._current_memory

    def hit_rate(self) -> float:
        total = self._hits + self._misses
        if total == 0:
            return 0.0
        return self._hits / total

    def stats(self) -> Dict[str, Any]:
        return {
            'size': len(self._cache),
            'max_size': self.max_size,
            'memory_bytes': self._current_memory,
            'max_memory_bytes': self.max_memory_bytes,
            'hits': self._hits,
            'misses': self._misses,
            'hit_rate': self.hit_rate()
        }


RouteKey = Tuple[str, int, int]


class RouteCache:
    """Shortest-path rows per (direction, slot, vertex).

    Rows of one slot only: the first lookup for another slot drops every cached row.
    """

    def __init__(self, max_size: int = 4096, max_memory_bytes: Optional[int] = 256 * 1024 * 1024):
        self._rows: LRUCache[RouteKey, Tuple[np.ndarray, np.ndarray]] = LRUCache(
            max_size=max_size,
            max_memory_bytes=max_memory_bytes
        )
        self._slot: Optional[int] = None
        self._slot_lock = threading.Lock()
        self._slot_changes = 0

    def _advance(self, slot: int):
        with self._slot_lock:
            if self._slot != slot:
                if self._slot is not None:
                    self._slot_changes += 1
                self._rows.clear()
                self._slot = slot

    def get(self, direction: str, slot: int, vertex: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        self._advance(slot)
        return self._rows.get((direction, slot, vertex))

    def put(self, direction: str, slot: int, vertex: int, row: Tuple[np.ndarray, np.ndarray]):
        self._advance(slot)
        self._rows.set((direction, slot, vertex), row)

    def missing(self, direction: str, slot: int, vertices: List[int]) -> List[int]:
        self._advance(slot)
        return [v for v in vertices if (direction, slot, v) not in self._rows]

    def clear(self):
        with self._slot_lock:
            self._rows.clear()
            self._slot = None

    @property
    def current_slot(self) -> Optional[int]:
        return self._slot

    def stats(self) -> Dict[str, Any]:
        stats = self._rows.stats()
        stats['slot'] = self._slot
        stats['slot_changes'] = self._slot_changes
        return stats
