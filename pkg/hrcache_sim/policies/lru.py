"""
Least recently used replacement.
"""

from collections import OrderedDict
from typing import Dict, List, Tuple

from hrcache_sim.core.trace import Request
from hrcache_sim.policies.base import CachePolicy


class LruPolicy(CachePolicy):
    """LRU over an OrderedDict: the last item is the most recently used."""

    name = "lru"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.entries: "OrderedDict[int, int]" = OrderedDict()

    def contains(self, key: int) -> bool:
        return key in self.entries

    def on_request(self, request: Request) -> bool:
        if request.key in self.entries:
            self.entries.move_to_end(request.key)
            return True
        if request.size > self.capacity:
            return False
        while self.used_bytes + request.size > self.capacity:
            _, size = self.entries.popitem(last=False)
            self.used_bytes -= size
        self.entries[request.key] = request.size
        self.used_bytes += request.size
        return False


class NaiveLru(CachePolicy):
    """List-based LRU used as a reference for the OrderedDict version."""

    name = "naive_lru"

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.stack: List[Tuple[int, int]] = []

    def contains(self, key: int) -> bool:
        return any(k == key for k, _ in self.stack)

    def on_request(self, request: Request) -> bool:
        for i, (key, size) in enumerate(self.stack):
            if key == request.key:
                self.stack.append(self.stack.pop(i))
                return True
        if request.size > self.capacity:
            return False
        while sum(s for _, s in self.stack) + request.size > self.capacity:
            self.stack.pop(0)
        self.stack.append((request.key, request.size))
        self.used_bytes = sum(s for _, s in self.stack)
        return False
