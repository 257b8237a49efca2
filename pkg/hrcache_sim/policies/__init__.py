"""
Cache replacement policies behind one interface.
"""

from hrcache_sim.policies.base import CachePolicy
from hrcache_sim.policies.belady import BeladyPolicy, next_use_table
from hrcache_sim.policies.hrcache import (ConstantPredictor, HrCachePolicy, TwoQueueCache, first_window_boundary,
                                         split_windows, window_labels, window_training_set)
from hrcache_sim.policies.lfuda import LfudaPolicy
from hrcache_sim.policies.lru import LruPolicy, NaiveLru
from hrcache_sim.policies.lru_k import LruKPolicy
from hrcache_sim.policies.registry import POLICIES, create_policy
from hrcache_sim.policies.s4lru import S4LruPolicy

__all__ = [
    'CachePolicy',
    'LruPolicy',
    'NaiveLru',
    'LruKPolicy',
    'S4LruPolicy',
    'LfudaPolicy',
    'BeladyPolicy',
    'next_use_table',
    'HrCachePolicy',
    'TwoQueueCache',
    'ConstantPredictor',
    'first_window_boundary',
    'split_windows',
    'window_labels',
    'window_training_set',
    'POLICIES',
    'create_policy',
]
