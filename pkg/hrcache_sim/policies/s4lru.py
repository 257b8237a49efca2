"""
S4LRU: four LRU segments of equal byte size.

Misses enter the lowest segment. A hit promotes the object one segment up and
segment overflow trickles tails down, out of the cache from the lowest segment.
"""

from collections import OrderedDict
from typing import Dict, List

from hrcache_sim.core.trace import Request
from hrcache_sim.policies.base import CachePolicy


class S4LruPolicy(CachePolicy):
    name = "s4lru"

    def __init__(self, capacity: int, n_segments: int = 4):
        super().__init__(capacity)
        self.n_segments = n_segments
        self.segment_capacity = capacity / n_segments
        self.segments: List["OrderedDict[int, int]"] = [OrderedDict() for _ in range(n_segments)]
        self.segment_bytes = [0] * n_segments
        self.level: Dict[int, int] = {}

    def contains(self, key: int) -> bool:
        return key in self.level

    def _insert(self, key: int, size: int, level: int) -> None:
        # last item of a segment is its head
        while level >= 0:
            self.segments[level][key] = size
            self.segment_bytes[level] += size
            self.level[key] = level
            if self.segment_bytes[level] <= self.segment_capacity:
                return
            key, size = self.segments[level].popitem(last=False)
            self.segment_bytes[level] -= size
            level -= 1
        del self.level[key]
        self.used_bytes -= size

    def on_request(self, request: Request) -> bool:
        key = request.key
        level = self.level.get(key)
        if level is not None:
            size = self.segments[level].pop(key)
            self.segment_bytes[level] -= size
            self._insert(key, size, min(level + 1, self.n_segments - 1))
            return True
        if request.size > self.segment_capacity:
            return False
        self.used_bytes += request.size
        self._insert(key, request.size, 0)
        return False
