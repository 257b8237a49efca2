"""
Policy selection by name.
"""

from typing import Dict, Optional, Type

from hrcache_sim.core.config import GbdtParams, WindowConfig
from hrcache_sim.core.errors import ConfigError
from hrcache_sim.core.trace import Trace
from hrcache_sim.policies.base import CachePolicy
from hrcache_sim.policies.belady import BeladyPolicy
from hrcache_sim.policies.hrcache import HrCachePolicy
from hrcache_sim.policies.lfuda import LfudaPolicy
from hrcache_sim.policies.lru import LruPolicy
from hrcache_sim.policies.lru_k import LruKPolicy
from hrcache_sim.policies.s4lru import S4LruPolicy

POLICIES: Dict[str, Type[CachePolicy]] = {
    "lru": LruPolicy,
    "lruk": LruKPolicy,
    "s4lru": S4LruPolicy,
    "lfuda": LfudaPolicy,
    "belady": BeladyPolicy,
    "hrcache": HrCachePolicy,
}


def create_policy(name: str, capacity: int, trace: Optional[Trace] = None,
                  window: Optional[WindowConfig] = None, gbdt: Optional[GbdtParams] = None,
                  seed: int = 0, k: int = 4) -> CachePolicy:
    """Build a fresh policy instance. Belady needs the trace it will replay."""
    if name not in POLICIES:
        raise ConfigError(f"Unknown policy '{name}', expected one of {', '.join(POLICIES)}")
    if name == "belady":
        if trace is None:
            raise ConfigError("The belady policy needs the trace to build its next-use table")
        return BeladyPolicy(capacity, trace)
    if name == "hrcache":
        return HrCachePolicy(capacity, window=window, gbdt=gbdt, seed=seed)
    if name == "lruk":
        return LruKPolicy(capacity, k=k)
    return POLICIES[name](capacity)
