"""
Simulation driver, reports and command-line interface.
"""

from hrcache_sim.engine.reports import write_report
from hrcache_sim.engine.simulator import ComparisonReport, SimReport, compare, overhead_counters, run_sim

__all__ = [
    'SimReport',
    'ComparisonReport',
    'run_sim',
    'compare',
    'overhead_counters',
    'write_report',
]
