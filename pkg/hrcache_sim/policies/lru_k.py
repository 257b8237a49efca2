"""
LRU-K replacement: evict the entry whose K-th most recent reference is oldest.
"""

import heapq
from collections import deque
from typing import Deque, Dict, List, Tuple

from hrcache_sim.core.errors import ConfigError
from hrcache_sim.core.trace import Request
from hrcache_sim.policies.base import CachePolicy

Priority = Tuple[int, int, int]


class LruKPolicy(CachePolicy):
    """
    Entries with fewer than K references rank oldest; ties go to the older last access.

    Reference times are request sequence numbers. Reference history is kept only
    while an object is resident. Evictions pop a heap of priorities and skip
    entries that were superseded by a later reference.
    """

    name = "lruk"

    def __init__(self, capacity: int, k: int = 4):
        super().__init__(capacity)
        if k < 1:
            raise ConfigError(f"LRU-K needs k >= 1, got {k}")
        self.k = k
        self.clock = 0
        self.sizes: Dict[int, int] = {}
        self.history: Dict[int, Deque[int]] = {}
        self.priority: Dict[int, Priority] = {}
        self.heap: List[Tuple[Priority, int]] = []

    def contains(self, key: int) -> bool:
        return key in self.sizes

    def _reference(self, key: int) -> None:
        refs = self.history[key]
        refs.append(self.clock)
        if len(refs) >= self.k:
            priority = (1, refs[0], refs[-1])
        else:
            priority = (0, 0, refs[-1])
        self.priority[key] = priority
        heapq.heappush(self.heap, (priority, key))

    def _evict(self) -> None:
        while True:
            priority, key = heapq.heappop(self.heap)
            if self.priority.get(key) == priority:
                break
        self.used_bytes -= self.sizes.pop(key)
        del self.history[key]
        del self.priority[key]

    def on_request(self, request: Request) -> bool:
        self.clock += 1
        key = request.key
        if key in self.sizes:
            self._reference(key)
            return True
        if request.size > self.capacity:
            return False
        while self.used_bytes + request.size > self.capacity:
            self._evict()
        self.sizes[key] = request.size
        self.used_bytes += request.size
        self.history[key] = deque(maxlen=self.k)
        self._reference(key)
        return False
