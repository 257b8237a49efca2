"""
Offline furthest-in-future replacement with bypass.
"""

import heapq
import logging
from typing import Dict, List, Tuple

import numpy as np

from hrcache_sim.core.errors import FutureTableError
from hrcache_sim.core.trace import Request, Trace
from hrcache_sim.policies.base import CachePolicy

logger = logging.getLogger(__name__)


def next_use_table(trace: Trace) -> np.ndarray:
    """
    Index of the next request to the same key for every request.

    Keys never requested again get len(trace), which is later than any real index.
    """
    never = len(trace)
    table = np.full(len(trace), never, dtype=np.int64)
    seen: Dict[int, int] = {}
    keys = trace.keys.tolist()
    for i in range(len(keys) - 1, -1, -1):
        table[i] = seen.get(keys[i], never)
        seen[keys[i]] = i
    return table


class BeladyPolicy(CachePolicy):
    """
    Belady's rule generalized to variable sizes.

    On a miss the incoming object competes with the residents: while it does not fit,
    whichever of them is next used furthest in the future goes, and if that is the
    incoming object it is bypassed. The policy must replay exactly the trace its
    next-use table was built from.
    """

    name = "belady"

    def __init__(self, capacity: int, trace: Trace):
        super().__init__(capacity)
        self.trace = trace
        self.next_use = next_use_table(trace)
        self.position = 0
        self.sizes: Dict[int, int] = {}
        self.resident_next: Dict[int, int] = {}
        self.heap: List[Tuple[int, int]] = []
        self.bypassed = 0

    def contains(self, key: int) -> bool:
        return key in self.sizes

    def _furthest(self) -> Tuple[int, int]:
        while True:
            negated, key = self.heap[0]
            if self.resident_next.get(key) == -negated:
                return key, -negated
            heapq.heappop(self.heap)

    def _set_next(self, key: int, next_index: int) -> None:
        self.resident_next[key] = next_index
        heapq.heappush(self.heap, (-next_index, key))

    def on_request(self, request: Request) -> bool:
        i = self.position
        if i >= len(self.next_use) or int(self.trace.keys[i]) != request.key:
            raise FutureTableError(f"Request {i} (key {request.key}) does not match the next-use table")
        self.position += 1
        next_index = int(self.next_use[i])
        key = request.key

        if key in self.sizes:
            self._set_next(key, next_index)
            return True
        if request.size > self.capacity:
            return False
        while self.used_bytes + request.size > self.capacity:
            victim, victim_next = self._furthest()
            if next_index >= victim_next:
                self.bypassed += 1
                return False
            heapq.heappop(self.heap)
            del self.resident_next[victim]
            self.used_bytes -= self.sizes.pop(victim)
        self.sizes[key] = request.size
        self.used_bytes += request.size
        self._set_next(key, next_index)
        return False
