"""
Base class for cache replacement policies.
"""

from abc import ABC, abstractmethod
from typing import Iterable, List

from hrcache_sim.core.errors import ConfigError
from hrcache_sim.core.trace import Request


class CachePolicy(ABC):
    """
    A byte-capacity cache replayed one request at a time.

    on_request returns True for a hit. Objects larger than the capacity are never
    admitted and used_bytes never exceeds capacity once a call returns.
    """

    name = "base"

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ConfigError(f"Cache capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.used_bytes = 0

    @abstractmethod
    def on_request(self, request: Request) -> bool:
        """Serve one request, admitting or evicting as the policy decides."""

    @abstractmethod
    def contains(self, key: int) -> bool:
        """Whether key is resident."""

    def process_batch(self, requests: Iterable[Request]) -> List[bool]:
        return [self.on_request(r) for r in requests]

    def __contains__(self, key: int) -> bool:
        return self.contains(key)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(capacity={self.capacity}, used_bytes={self.used_bytes})"
