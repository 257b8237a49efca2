#!/usr/bin/env python3
"""
Whole-system checks on seeded synthetic traces.

The million-request end-to-end and ablation runs take several minutes each and
only run with HRCACHE_SLOW_TESTS=1.
"""

import os
import sys
import unittest
from dataclasses import replace


# Add the parent directory to sys.path to allow importing the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hrcache_sim.core.config import InterarrivalModel, SizeModel, SyntheticConfig, WindowConfig
from hrcache_sim.core.hazard import synthetic_hazards
from hrcache_sim.core.oracle import HroMode, hro_upper_bound
from hrcache_sim.core.trace import generate_mixed, generate_synthetic, trace_stats
from hrcache_sim.engine.simulator import compare, run_sim

ONLINE_POLICIES = ("lru", "lruk", "s4lru", "lfuda")
SLOW = os.environ.get("HRCACHE_SLOW_TESTS") == "1"


def poisson_config(seed, size_model):
    return SyntheticConfig(n_objects=100, n_requests=10_000, popularity_alpha=0.8,
                           interarrival=InterarrivalModel.poisson(1.0),
                           size_model=size_model, seed=seed)


class TestUpperBoundDominance(unittest.TestCase):
    def test_equal_size_hit_probability(self):
        """HR-E with true hazards beats every online policy's object hit ratio."""
        for seed in range(20):
            config = poisson_config(seed, SizeModel.constant(1))
            trace = generate_synthetic(config)
            bound = hro_upper_bound(trace, 10, synthetic_hazards(config), HroMode.HR_E)
            for name in ONLINE_POLICIES:
                report = run_sim(trace, name, 10, warmup=0)
                self.assertGreaterEqual(bound.hit_probability, report.object_hit_ratio,
                                        f"{name} beats the bound on seed {seed}")

    def test_variable_size_byte_hit_probability(self):
        """HR-FC with true hazards beats every online policy's byte hit ratio."""
        for seed in range(20):
            config = poisson_config(seed, SizeModel.lognormal(3.0, 0.5))
            trace = generate_synthetic(config)
            stats = trace_stats(trace)
            capacity = int(10 * stats.unique_bytes / stats.unique_objects)
            bound = hro_upper_bound(trace, capacity, synthetic_hazards(config), HroMode.HR_FC)
            for name in ONLINE_POLICIES:
                report = run_sim(trace, name, capacity, warmup=0)
                self.assertGreaterEqual(bound.byte_hit_probability, report.byte_hit_ratio,
                                        f"{name} beats the bound on seed {seed}")


def mixed_trace(seed):
    return generate_mixed([
        SyntheticConfig(n_objects=50_000, n_requests=500_000, popularity_alpha=0.8,
                        interarrival=InterarrivalModel.poisson(1.0),
                        size_model=SizeModel.lognormal(8.0, 1.0), seed=seed),
        SyntheticConfig(n_objects=50_000, n_requests=500_000, popularity_alpha=1.1,
                        interarrival=InterarrivalModel.generalized_pareto(1.0, 0.4),
                        size_model=SizeModel.lognormal(7.0, 1.5), seed=seed + 1_000),
    ])


def hrcache_reduction(trace, window):
    capacity = int(0.05 * trace_stats(trace).unique_bytes)
    report = compare(trace, ["lru", "hrcache"], [capacity], window=window)
    return report.traffic_reduction_vs_lru["hrcache"][str(capacity)]


@unittest.skipUnless(SLOW, "set HRCACHE_SLOW_TESTS=1 to run")
class TestEndToEnd(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.seeds = list(range(5))
        cls.full = {seed: hrcache_reduction(mixed_trace(seed), WindowConfig()) for seed in cls.seeds}

    def test_reduction_over_lru(self):
        """HR-Cache saves at least 2% of LRU's miss bytes on every seed."""
        for seed, reduction in self.full.items():
            self.assertGreaterEqual(reduction, 2.0, f"seed {seed}")

    def test_ablations_do_not_help(self):
        """Dropping look-back or switching to Poisson hazards loses savings on most seeds."""
        for ablation in (replace(WindowConfig(), look_back=False), replace(WindowConfig(), hazard_mode="poisson")):
            worse = sum(1 for seed in self.seeds
                        if hrcache_reduction(mixed_trace(seed), ablation) <= self.full[seed])
            self.assertGreaterEqual(worse, 4, f"ablation {ablation}")


if __name__ == '__main__':
    unittest.main()
