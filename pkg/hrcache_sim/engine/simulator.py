"""
Trace replay, hit metrics and policy comparisons.
"""

import logging
import multiprocessing
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hrcache_sim.core.config import GbdtParams, WindowConfig
from hrcache_sim.core.errors import ConfigError
from hrcache_sim.core.trace import Trace
from hrcache_sim.policies.base import CachePolicy
from hrcache_sim.policies.hrcache import first_window_boundary
from hrcache_sim.policies.registry import create_policy

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
TRAFFIC_REDUCTION_FORMULA = "(miss_bytes(lru) - miss_bytes(policy)) / miss_bytes(lru) * 100"


@dataclass
class SimReport:
    policy: str
    capacity: int
    warmup_requests: int
    measured_requests: int
    hits: int
    hit_bytes: int
    miss_bytes: int
    object_hit_ratio: float
    byte_hit_ratio: float
    byte_miss_ratio: float
    predictions_made: int = 0
    features_built: int = 0
    prediction_calls: int = 0
    wall_time: Optional[float] = None

    @property
    def total_bytes(self) -> int:
        return self.hit_bytes + self.miss_bytes

    def to_dict(self, include_timing: bool = False) -> Dict:
        data = asdict(self)
        if not include_timing:
            data.pop("wall_time")
        return data


@dataclass
class ComparisonReport:
    reports: List[SimReport]
    traffic_reduction_vs_lru: Dict[str, Dict[str, float]]
    zero_baseline_capacities: List[int] = field(default_factory=list)

    def report_for(self, policy: str, capacity: int) -> SimReport:
        for report in self.reports:
            if report.policy == policy and report.capacity == capacity:
                return report
        raise KeyError((policy, capacity))

    def to_dict(self, include_timing: bool = False) -> Dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "traffic_reduction_formula": TRAFFIC_REDUCTION_FORMULA,
            "reports": [r.to_dict(include_timing) for r in self.reports],
            "traffic_reduction_vs_lru": self.traffic_reduction_vs_lru,
            "zero_baseline_capacities": self.zero_baseline_capacities,
        }


def _counters(policy: CachePolicy) -> Tuple[int, int, int]:
    return (getattr(policy, "predictions_made", 0),
            getattr(policy, "features_built", 0),
            getattr(policy, "prediction_calls", 0))


def run_sim(trace: Trace, policy: Union[str, CachePolicy], capacity: int,
            warmup: Optional[int] = None, seed: int = 0,
            window: Optional[WindowConfig] = None, gbdt: Optional[GbdtParams] = None) -> SimReport:
    """
    Replay trace through a policy and measure hits after the warmup prefix.

    warmup=None uses the end of the first HR-Cache window at this capacity, so every
    policy is measured over the same requests.
    """
    window = window or WindowConfig()
    if isinstance(policy, str):
        policy = create_policy(policy, capacity, trace=trace, window=window, gbdt=gbdt, seed=seed)
    if warmup is None:
        warmup = first_window_boundary(trace, capacity, window.multiplier)
    if not 0 <= warmup <= len(trace):
        raise ConfigError(f"warmup must be within [0, {len(trace)}], got {warmup}")

    started = time.time()
    policy.process_batch(trace[:warmup])
    before = _counters(policy)
    measured = trace[warmup:]
    hits = np.asarray(policy.process_batch(measured), dtype=bool)
    after = _counters(policy)
    elapsed = time.time() - started

    sizes = measured.sizes
    hit_bytes = int(sizes[hits].sum()) if len(hits) else 0
    total_bytes = int(sizes.sum())
    n_hits = int(hits.sum())
    byte_hit_ratio = hit_bytes / total_bytes if total_bytes else 0.0
    report = SimReport(
        policy=policy.name,
        capacity=capacity,
        warmup_requests=warmup,
        measured_requests=len(measured),
        hits=n_hits,
        hit_bytes=hit_bytes,
        miss_bytes=total_bytes - hit_bytes,
        object_hit_ratio=n_hits / len(measured) if len(measured) else 0.0,
        byte_hit_ratio=byte_hit_ratio,
        byte_miss_ratio=1.0 - byte_hit_ratio,
        predictions_made=after[0] - before[0],
        features_built=after[1] - before[1],
        prediction_calls=after[2] - before[2],
        wall_time=elapsed,
    )
    logger.info(f"{policy.name} @ {capacity} bytes: byte hit ratio {byte_hit_ratio:.4f} "
                f"over {len(measured)} requests in {elapsed:.2f}s")
    return report


def _run_job(job: Tuple[Trace, str, int, int, int, WindowConfig, Optional[GbdtParams]]) -> SimReport:
    trace, name, capacity, warmup, seed, window, gbdt = job
    return run_sim(trace, name, capacity, warmup=warmup, seed=seed, window=window, gbdt=gbdt)


def traffic_reduction(lru_miss_bytes: int, policy_miss_bytes: int) -> float:
    if lru_miss_bytes == 0:
        return 0.0
    return (lru_miss_bytes - policy_miss_bytes) / lru_miss_bytes * 100.0


def compare(trace: Trace, policies: Sequence[str], capacities: Sequence[int],
            warmup: Optional[int] = None, seed: int = 0,
            window: Optional[WindowConfig] = None, gbdt: Optional[GbdtParams] = None,
            workers: int = 1) -> ComparisonReport:
    """Run every policy at every capacity and report WAN traffic reduction against LRU."""
    if "lru" not in policies:
        raise ConfigError("compare needs 'lru' among the policies as the reduction baseline")
    window = window or WindowConfig()
    jobs = []
    for capacity in capacities:
        boundary = warmup if warmup is not None else first_window_boundary(trace, capacity, window.multiplier)
        for name in policies:
            jobs.append((trace, name, capacity, boundary, seed, window, gbdt))

    if workers > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            reports = pool.map(_run_job, jobs)
    else:
        reports = [_run_job(job) for job in jobs]

    reduction: Dict[str, Dict[str, float]] = {name: {} for name in policies}
    zero_baseline = []
    for capacity in capacities:
        lru_miss = next(r.miss_bytes for r in reports if r.policy == "lru" and r.capacity == capacity)
        if lru_miss == 0:
            logger.warning(f"LRU has no miss bytes at capacity {capacity}, reporting 0% reduction")
            zero_baseline.append(capacity)
        for report in reports:
            if report.capacity == capacity:
                reduction[report.policy][str(capacity)] = traffic_reduction(lru_miss, report.miss_bytes)
    return ComparisonReport(reports, reduction, zero_baseline)


def overhead_counters(report: SimReport) -> Dict[str, float]:
    """Per-request prediction, feature and batched-call counts over the measured region."""
    n = report.measured_requests
    if n == 0:
        return {"pred_per_request": 0.0, "features_per_request": 0.0, "calls_per_request": 0.0}
    return {
        "pred_per_request": report.predictions_made / n,
        "features_per_request": report.features_built / n,
        "calls_per_request": report.prediction_calls / n,
    }
