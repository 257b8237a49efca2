"""
LFU with dynamic aging.
"""

import heapq
from typing import Dict, List, Tuple

from hrcache_sim.core.trace import Request
from hrcache_sim.policies.base import CachePolicy


class LfudaPolicy(CachePolicy):
    """
    Priority is frequency plus the global age L; the minimum priority is evicted
    and L becomes its priority. Equal priorities evict the older insertion first.
    """

    name = "lfuda"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.age = 0.0
        self.inserted = 0
        self.sizes: Dict[int, int] = {}
        self.frequency: Dict[int, int] = {}
        self.priority: Dict[int, Tuple[float, int]] = {}
        self.heap: List[Tuple[float, int, int]] = []

    def contains(self, key: int) -> bool:
        return key in self.sizes

    def _push(self, key: int, order: int) -> None:
        value = self.frequency[key] + self.age
        self.priority[key] = (value, order)
        heapq.heappush(self.heap, (value, order, key))

    def _evict(self) -> None:
        while True:
            value, order, key = heapq.heappop(self.heap)
            if self.priority.get(key) == (value, order):
                break
        self.age = value
        self.used_bytes -= self.sizes.pop(key)
        del self.frequency[key]
        del self.priority[key]

    def on_request(self, request: Request) -> bool:
        key = request.key
        if key in self.sizes:
            self.frequency[key] += 1
            self._push(key, self.priority[key][1])
            return True
        if request.size > self.capacity:
            return False
        while self.used_bytes + request.size > self.capacity:
            self._evict()
        self.inserted += 1
        self.sizes[key] = request.size
        self.frequency[key] = 1
        self.used_bytes += request.size
        self._push(key, self.inserted)
        return False
