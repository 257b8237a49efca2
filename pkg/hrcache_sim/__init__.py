"""
hrcache-sim - trace-driven cache simulation with hazard-rate-labeled learned caching.
"""

from hrcache_sim.core.config import GbdtParams, SyntheticConfig, WindowConfig
from hrcache_sim.core.trace import Request, Trace, generate_mixed, generate_synthetic, load_trace, parse_trace
from hrcache_sim.engine import ComparisonReport, SimReport, compare, overhead_counters, run_sim, write_report
from hrcache_sim.policies import CachePolicy, HrCachePolicy, create_policy

__version__ = "1.0.0"

__all__ = [
    'GbdtParams',
    'SyntheticConfig',
    'WindowConfig',
    'Request',
    'Trace',
    'generate_synthetic',
    'generate_mixed',
    'load_trace',
    'parse_trace',
    'SimReport',
    'ComparisonReport',
    'run_sim',
    'compare',
    'overhead_counters',
    'write_report',
    'CachePolicy',
    'HrCachePolicy',
    'create_policy',
]
