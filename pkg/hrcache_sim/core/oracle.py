"""
Hazard rate ordering (HRO) reconstruction over a window of requests.

At every request time the virtual HRO cache holds the objects with the largest
current hazard rates: whole objects for equal sizes (HR-E), whole objects plus one
fractional object for variable sizes (HR-FC). A request is a hit when its object is
in that virtual cache.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from hrcache_sim.core.config import SAMPLING_COSTS
from hrcache_sim.core.errors import ConfigError, InsufficientDataError
from hrcache_sim.core.hazard import HazardFunction, HazardTable
from hrcache_sim.core.trace import Trace

logger = logging.getLogger(__name__)


class HroMode(str, Enum):
    HR_E = "hr_e"
    HR_FC = "hr_fc"


@dataclass(frozen=True)
class SamplePlan:
    """Objects whose requests are labeled in one window."""

    sampled_keys: Tuple[int, ...]
    sample_rate: float
    op_budget: int

    def __len__(self) -> int:
        return len(self.sampled_keys)

    def __contains__(self, key: int) -> bool:
        return int(key) in self.sampled_keys


class HroMark(NamedTuple):
    request_index: int
    hro_hit: bool
    hit_fraction: float


class HroLabel(NamedTuple):
    request_index: int
    hro_hit: bool
    hit_fraction: float
    cache_friendly: bool


@dataclass(frozen=True)
class HroBound:
    hit_probability: float
    byte_hit_probability: float
    marked_requests: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "hit_probability": self.hit_probability,
            "byte_hit_probability": self.byte_hit_probability,
            "marked_requests": self.marked_requests,
        }


def calibrate_sampling(window: Trace, op_budget: int, seed: int, cost: str = "window") -> SamplePlan:
    """
    Choose the sampled objects so that the labeling work stays within op_budget.

    With cost="window" the work is charged as sampled keys x window requests and the
    rate is min(1, op_budget / (unique keys x requests)). With cost="sampled" it is
    charged as sampled keys x requests to sampled keys, which is what the HRO
    reconstruction evaluates: keys are taken in a seeded random order for as long as
    that product fits the budget. Both draw without replacement.
    """
    if len(window) == 0:
        raise InsufficientDataError("calibrate_sampling needs a non-empty window")
    if cost not in SAMPLING_COSTS:
        raise ConfigError(f"sampling cost must be one of {SAMPLING_COSTS}, got {cost}")
    n_requests = len(window)
    if cost == "sampled":
        unique, counts = np.unique(window.keys, return_counts=True)
        order = np.random.default_rng(seed).permutation(len(unique))
        work = np.arange(1, len(unique) + 1) * np.cumsum(counts[order])
        n_sampled = max(1, int(np.searchsorted(work, op_budget, side="right")))
        chosen = np.sort(unique[order[:n_sampled]])
        rate = n_sampled / len(unique)
    else:
        unique = np.unique(window.keys)
        rate = min(1.0, op_budget / (len(unique) * n_requests))
        if rate >= 1.0:
            chosen = unique
        else:
            n_sampled = max(1, int(math.floor(rate * len(unique))))
            rng = np.random.default_rng(seed)
            chosen = np.sort(rng.choice(unique, size=n_sampled, replace=False))
    logger.debug(f"Sampling {len(chosen)}/{len(unique)} keys (rate {rate:.4f}) over {n_requests} requests")
    return SamplePlan(tuple(int(k) for k in chosen.tolist()), rate, op_budget)


def full_plan(window: Trace) -> SamplePlan:
    """A plan that samples every key of the window."""
    keys = np.unique(window.keys)
    return SamplePlan(tuple(int(k) for k in keys.tolist()), 1.0, len(keys) * len(window))


def _first_sizes(window: Trace) -> Dict[int, int]:
    unique, first = np.unique(window.keys, return_index=True)
    return dict(zip(unique.tolist(), window.sizes[first].tolist()))


def effective_capacity(window: Trace, plan: SamplePlan, capacity: float) -> float:
    """Capacity scaled by the sampled share of the window's unique bytes."""
    sizes = _first_sizes(window)
    total = sum(sizes.values())
    if total == 0:
        return 0.0
    sampled = sum(sizes[k] for k in plan.sampled_keys)
    return capacity * sampled / total


def _as_table(hazards: Union[HazardTable, Mapping[int, HazardFunction]], keys: Sequence[int]) -> HazardTable:
    if not isinstance(hazards, HazardTable):
        hazards = HazardTable(hazards)
    if len(hazards) == len(keys) and all(k in hazards for k in keys):
        return hazards
    return hazards.subset(keys)


def reconstruct_hro(window: Trace, plan: SamplePlan,
                    hazards: Union[HazardTable, Mapping[int, HazardFunction]],
                    capacity: float, mode: Union[HroMode, str] = HroMode.HR_FC,
                    random_ties: bool = False, seed: int = 0) -> List[HroMark]:
    """
    Mark each request to a sampled key as an HRO hit or miss.

    Ages are measured from each key's previous request in the window (the window start
    for keys not yet requested). Ties between equal hazards go to the smaller key, or
    to a seeded random order when random_ties is set.
    """
    mode = HroMode(mode)
    if len(window) == 0:
        return []
    keys = list(plan.sampled_keys)
    table = _as_table(hazards, keys)
    first_sizes = _first_sizes(window)
    sizes = np.asarray([first_sizes[k] for k in keys], dtype=np.float64)
    budget = effective_capacity(window, plan, capacity)

    slots = 0
    if mode is HroMode.HR_E:
        if len(sizes) and np.any(sizes != sizes[0]):
            raise ConfigError("hr_e mode requires all sampled objects to share one size")
        slots = int(math.floor(budget / sizes[0] + 1e-9)) if len(sizes) else 0

    if random_ties:
        tie_rank = np.random.default_rng(seed).permutation(len(keys))
    else:
        tie_rank = np.arange(len(keys))

    position = {k: i for i, k in enumerate(keys)}
    last_time = np.full(len(keys), float(window.times[0]))
    marks: List[HroMark] = []

    for index, (t, key) in enumerate(zip(window.times.tolist(), window.keys.tolist())):
        j = position.get(key)
        if j is None:
            continue
        rates = table.rates_at(t - last_time)
        r = rates[j]
        ahead = (rates > r) | ((rates == r) & (tie_rank < tie_rank[j]))
        if mode is HroMode.HR_E:
            hit = int(ahead.sum()) < slots
            fraction = 1.0 if hit else 0.0
        else:
            room = budget - float(sizes[ahead].sum())
            fraction = min(max(room, 0.0), sizes[j]) / sizes[j]
            hit = fraction > 0.0
        marks.append(HroMark(index, bool(hit), float(fraction)))
        last_time[j] = t

    return marks


def derive_labels(window: Trace, hro_marks: Sequence[HroMark], look_back: bool = True) -> List[HroLabel]:
    """
    Turn HRO marks into cache-friendly labels.

    With look-back, a hit marks the previous request to the same key as cache-friendly,
    since that request is the one that must have admitted the object. Without it, the
    label is the mark itself.
    """
    if not look_back:
        return [HroLabel(m.request_index, m.hro_hit, m.hit_fraction, m.hro_hit) for m in hro_marks]

    friendly = [False] * len(hro_marks)
    previous: Dict[int, int] = {}
    keys = window.keys
    for n, mark in enumerate(hro_marks):
        key = int(keys[mark.request_index])
        prev = previous.get(key)
        if mark.hro_hit and prev is not None:
            friendly[prev] = True
        previous[key] = n
    return [HroLabel(m.request_index, m.hro_hit, m.hit_fraction, f) for m, f in zip(hro_marks, friendly)]


def hro_upper_bound(trace: Trace, capacity: float,
                    hazards: Union[HazardTable, Mapping[int, HazardFunction]],
                    mode: Union[HroMode, str] = HroMode.HR_FC,
                    plan: Optional[SamplePlan] = None) -> HroBound:
    """Hit and byte-hit probability of the HRO rule over a whole trace."""
    plan = plan or full_plan(trace)
    marks = reconstruct_hro(trace, plan, hazards, capacity, mode)
    if not marks:
        raise InsufficientDataError("hro_upper_bound: no requests were marked")
    indices = np.asarray([m.request_index for m in marks])
    fractions = np.asarray([m.hit_fraction for m in marks])
    sizes = trace.sizes[indices].astype(np.float64)
    hits = sum(1 for m in marks if m.hro_hit)
    return HroBound(
        hit_probability=hits / len(marks),
        byte_hit_probability=float((fractions * sizes).sum() / sizes.sum()),
        marked_requests=len(marks),
    )
