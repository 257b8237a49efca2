"""
Hazard rate estimation for object inter-request times.

Per-object hazards are estimated non-parametrically: Nelson-Aalen increments of the
cumulative hazard are smoothed with an Epanechnikov kernel. Closed-form hazards
(exponential, generalized Pareto) are provided for validation and the Poisson mode.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from hrcache_sim.core.config import SyntheticConfig
from hrcache_sim.core.errors import ConfigError, InsufficientDataError, MissingHazardError
from hrcache_sim.core.trace import Request, object_scales

logger = logging.getLogger(__name__)

BANDWIDTH_FLOOR = 1e-9
KERNELS = ("epanechnikov",)


@dataclass(frozen=True)
class HazardIncrements:
    """Nelson-Aalen event table: distinct times, event counts, at-risk counts, increments."""

    times: np.ndarray
    events: np.ndarray
    at_risk: np.ndarray
    delta_h: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def as_tuples(self) -> List[Tuple[float, int, int, float]]:
        return list(zip(self.times.tolist(), self.events.tolist(),
                        self.at_risk.tolist(), self.delta_h.tolist()))

    def cumulative(self, t: float) -> float:
        """H(t): sum of increments at event times <= t."""
        return float(self.delta_h[: np.searchsorted(self.times, t, side="right")].sum())


@dataclass(frozen=True)
class InterRequestSample:
    """Gaps between consecutive requests of one object inside a window."""

    key: int
    durations: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return len(self.durations)


class HazardFunction(ABC):
    """A hazard rate as a function of time since the last request."""

    @abstractmethod
    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        """Evaluate the hazard at each age in ts."""
        pass

    def evaluate(self, t: float) -> float:
        return float(self.evaluate_many(np.asarray([t], dtype=np.float64))[0])

    @abstractmethod
    def to_dict(self) -> Dict:
        pass


def epanechnikov(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


class KernelHazardEstimator(HazardFunction):
    """Kernel-smoothed Nelson-Aalen hazard estimate."""

    def __init__(self, increments: HazardIncrements, bandwidth: float, kernel: str = "epanechnikov"):
        if not bandwidth > 0:
            raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
        if kernel not in KERNELS:
            raise ConfigError(f"Unsupported kernel: {kernel}")
        self.increments = increments
        self.bandwidth = float(bandwidth)
        self.kernel = kernel

    @property
    def support_end(self) -> float:
        return float(self.increments.times[-1]) + self.bandwidth

    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        u = (ts[:, None] - self.increments.times[None, :]) / self.bandwidth
        weighted = epanechnikov(u) * self.increments.delta_h[None, :]
        return weighted.sum(axis=1) / self.bandwidth

    def to_dict(self) -> Dict:
        return {
            "type": "kernel",
            "kernel": self.kernel,
            "bandwidth": self.bandwidth,
            "events": [
                {"t": t, "d": d, "n": n, "delta_h": dh}
                for t, d, n, dh in self.increments.as_tuples()
            ],
        }


class ClosedFormHazard(HazardFunction):
    """Exponential (constant) or generalized Pareto hazard."""

    def __init__(self, form: str, rate: float = 0.0, sigma: float = 0.0, xi: float = 0.0):
        if form == "exponential":
            if not rate > 0:
                raise ConfigError(f"exponential rate must be > 0, got {rate}")
        elif form == "generalized_pareto":
            if not sigma > 0 or xi < 0:
                raise ConfigError(f"generalized_pareto needs sigma > 0 and xi >= 0, got {sigma}, {xi}")
        else:
            raise ConfigError(f"Unknown closed-form hazard: {form}")
        self.form = form
        self.rate = float(rate)
        self.sigma = float(sigma)
        self.xi = float(xi)

    @classmethod
    def exponential(cls, rate: float) -> "ClosedFormHazard":
        return cls("exponential", rate=rate)

    @classmethod
    def generalized_pareto(cls, sigma: float, xi: float) -> "ClosedFormHazard":
        return cls("generalized_pareto", sigma=sigma, xi=xi)

    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        if self.form == "exponential":
            return np.full(ts.shape, self.rate)
        return 1.0 / (self.sigma + self.xi * ts)

    def to_dict(self) -> Dict:
        if self.form == "exponential":
            return {"type": "exponential", "rate": self.rate}
        return {"type": "generalized_pareto", "sigma": self.sigma, "xi": self.xi}


def time_granularity(times: np.ndarray) -> float:
    """Smallest positive duration representable at the trace's time resolution."""
    times = np.asarray(times, dtype=np.float64)
    if len(times) == 0 or np.all(times == np.floor(times)):
        return 1.0
    return 1e-6


def _clamped_gaps(times: np.ndarray, min_duration: float) -> np.ndarray:
    gaps = np.diff(times)
    return np.where(gaps > 0, gaps, min_duration)


def collect_durations(window_requests: Iterable[Request], key: int,
                      min_duration: Optional[float] = None) -> InterRequestSample:
    """
    Consecutive gaps between the request times of one key.

    Zero gaps (same-timestamp repeats) are clamped to min_duration, which defaults to
    the time granularity of the key's request times.
    """
    times = np.asarray([r.time for r in window_requests if r.key == key], dtype=np.float64)
    if len(times) < 2:
        return InterRequestSample(key, np.empty(0))
    if min_duration is None:
        min_duration = time_granularity(times)
    return InterRequestSample(key, _clamped_gaps(times, min_duration))


def collect_all_durations(times: np.ndarray, keys: np.ndarray, wanted: Optional[Iterable[int]] = None,
                          min_duration: Optional[float] = None) -> Dict[int, np.ndarray]:
    """One-pass version of collect_durations over column arrays, for many keys."""
    times = np.asarray(times, dtype=np.float64)
    keys = np.asarray(keys)
    if min_duration is None:
        min_duration = time_granularity(times)
    if wanted is not None:
        wanted_arr = np.asarray(sorted(wanted), dtype=keys.dtype)
        mask = np.isin(keys, wanted_arr)
        times, keys = times[mask], keys[mask]
    # stable sort keeps request order within each key
    order = np.argsort(keys, kind="stable")
    sorted_keys, sorted_times = keys[order], times[order]
    boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
    result: Dict[int, np.ndarray] = {}
    for group_keys, group_times in zip(np.split(sorted_keys, boundaries), np.split(sorted_times, boundaries)):
        if len(group_keys) == 0:
            continue
        key = int(group_keys[0])
        result[key] = _clamped_gaps(group_times, min_duration) if len(group_times) > 1 else np.empty(0)
    return result


def _require_sample(durations: Sequence[float]) -> np.ndarray:
    durations = np.asarray(durations, dtype=np.float64)
    if len(durations) == 0:
        raise InsufficientDataError("insufficient data: empty duration sample")
    return durations


def nelson_aalen(durations: Sequence[float]) -> HazardIncrements:
    """Nelson-Aalen increments d_j / n_j at each distinct duration."""
    durations = _require_sample(durations)
    times, events = np.unique(durations, return_counts=True)
    at_risk = len(durations) - np.concatenate([[0], np.cumsum(events)[:-1]])
    return HazardIncrements(
        times=times,
        events=events.astype(np.int64),
        at_risk=at_risk.astype(np.int64),
        delta_h=events / at_risk,
    )


def cumulative_hazard(increments: HazardIncrements, t: float) -> float:
    return increments.cumulative(t)


def kernel_hazard_eval(estimator: KernelHazardEstimator, t: float) -> float:
    """lambda(t) = (1/h) * sum_i K((t - t_i)/h) * dH(t_i)."""
    return estimator.evaluate(t)


def select_bandwidth(durations: Sequence[float], scale: float = 1.0,
                     floor: float = BANDWIDTH_FLOOR) -> float:
    """Median-scaled bandwidth: max(floor, scale * median(durations))."""
    durations = _require_sample(durations)
    return max(floor, scale * float(np.median(durations)))


def closed_form_eval(form: ClosedFormHazard, t: float) -> float:
    return form.evaluate(t)


def poisson_rate_estimate(durations: Sequence[float]) -> float:
    """Maximum-likelihood constant rate: count / total duration."""
    durations = _require_sample(durations)
    return len(durations) / float(durations.sum())


def build_estimator(durations: Sequence[float], mode: str = "kernel",
                    bandwidth_scale: float = 1.0) -> HazardFunction:
    """Fit one hazard function to a duration sample."""
    if mode == "kernel":
        return KernelHazardEstimator(nelson_aalen(durations),
                                     select_bandwidth(durations, scale=bandwidth_scale))
    if mode == "poisson":
        return ClosedFormHazard.exponential(poisson_rate_estimate(durations))
    raise ConfigError(f"Unknown hazard mode: {mode}")


class HazardTable:
    """
    Vectorized hazard evaluation for a fixed set of keys.

    Keys may share one function (the pooled fallback). Kernel hazards are evaluated
    from prefix sums of the Epanechnikov polynomial, so each evaluation costs
    O(log events). With grid_points > 0, kernel hazards are precomputed on a grid of
    ages per function and looked up at the nearest grid point.
    """

    KIND_KERNEL, KIND_EXPONENTIAL, KIND_PARETO = 0, 1, 2
    # beyond this age/bandwidth ratio the expanded square loses too many digits
    DIRECT_RATIO = 1e3

    def __init__(self, hazards: Mapping[int, HazardFunction], grid_points: int = 0):
        self.keys = np.asarray(sorted(hazards), dtype=np.uint64)
        self.functions = dict(hazards)
        self._positions = {int(k): i for i, k in enumerate(self.keys.tolist())}
        self.grid_points = grid_points
        n = len(self.keys)

        self._kind = np.zeros(n, dtype=np.int8)
        self._param = np.zeros(n)
        self._xi = np.zeros(n)
        self._segment = np.full(n, -1, dtype=np.int64)

        segments: Dict[int, int] = {}
        estimators: List[KernelHazardEstimator] = []
        for i, key in enumerate(self.keys.tolist()):
            fn = hazards[key]
            if isinstance(fn, KernelHazardEstimator):
                self._kind[i] = self.KIND_KERNEL
                if id(fn) not in segments:
                    segments[id(fn)] = len(estimators)
                    estimators.append(fn)
                self._segment[i] = segments[id(fn)]
            elif isinstance(fn, ClosedFormHazard):
                if fn.form == "exponential":
                    self._kind[i], self._param[i] = self.KIND_EXPONENTIAL, fn.rate
                else:
                    self._kind[i], self._param[i], self._xi[i] = self.KIND_PARETO, fn.sigma, fn.xi
            else:
                raise ConfigError(f"Unsupported hazard function for key {key}: {type(fn).__name__}")

        self._kernel_rows = np.flatnonzero(self._kind == self.KIND_KERNEL)
        self._exp_rows = np.flatnonzero(self._kind == self.KIND_EXPONENTIAL)
        self._pareto_rows = np.flatnonzero(self._kind == self.KIND_PARETO)
        self._build_kernel_index(estimators)
        if grid_points > 0 and estimators:
            self._build_grid(estimators, grid_points)

    def _build_kernel_index(self, estimators: List[KernelHazardEstimator]) -> None:
        self._seg_h = np.asarray([e.bandwidth for e in estimators])
        self._seg_end = np.asarray([e.support_end for e in estimators])
        times = [e.increments.times for e in estimators]
        dh = [e.increments.delta_h for e in estimators]
        counts = np.asarray([len(t) for t in times], dtype=np.int64)
        self._seg_start = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
        # prefix sums restart in every segment, each with a leading zero
        self._prefix_offset = self._seg_start + np.arange(len(estimators), dtype=np.int64)
        if estimators:
            self._times = np.concatenate(times)
            self._dh = np.concatenate(dh)
            # complex keys sort by (segment, time), so one searchsorted serves every segment
            segment_ids = np.repeat(np.arange(len(estimators), dtype=np.float64), counts)
            self._composite = segment_ids + 1j * self._times
            self._p0 = np.concatenate([np.concatenate([[0.0], np.cumsum(d)]) for d in dh])
            self._p1 = np.concatenate([np.concatenate([[0.0], np.cumsum(d * t)]) for d, t in zip(dh, times)])
            self._p2 = np.concatenate([np.concatenate([[0.0], np.cumsum(d * t * t)]) for d, t in zip(dh, times)])
        else:
            self._times = self._dh = self._p0 = self._p1 = self._p2 = np.empty(0)
            self._composite = np.empty(0, dtype=np.complex128)

    def _kernel_exact(self, segments: np.ndarray, ages: np.ndarray) -> np.ndarray:
        h = self._seg_h[segments]
        inside = ages <= self._seg_end[segments]
        a = np.minimum(ages, self._seg_end[segments])
        seg = segments.astype(np.float64)
        lo = np.searchsorted(self._composite, seg + 1j * (a - h), side="left")
        hi = np.searchsorted(self._composite, seg + 1j * (a + h), side="right")
        shift = self._prefix_offset[segments] - self._seg_start[segments]
        s0 = self._p0[hi + shift] - self._p0[lo + shift]
        s1 = self._p1[hi + shift] - self._p1[lo + shift]
        s2 = self._p2[hi + shift] - self._p2[lo + shift]
        # sum of (a - t)^2 dH over the kernel support
        spread = a * a * s0 - 2.0 * a * s1 + s2
        rates = 0.75 / h * (s0 - spread / (h * h))

        direct = np.flatnonzero(inside & (a > self.DIRECT_RATIO * h))
        if len(direct):
            rates[direct] = self._kernel_direct(lo[direct], hi[direct], a[direct], h[direct])
        return np.where(inside, np.maximum(rates, 0.0), 0.0)

    def _kernel_direct(self, lo: np.ndarray, hi: np.ndarray, a: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Kernel sums over the events in [lo, hi), one query per row."""
        counts = hi - lo
        rows = np.repeat(np.arange(len(lo)), counts)
        firsts = np.repeat(np.cumsum(counts) - counts, counts)
        events = np.repeat(lo, counts) + np.arange(int(counts.sum())) - firsts
        u = (a[rows] - self._times[events]) / h[rows]
        sums = np.bincount(rows, weights=self._dh[events] * (1.0 - u * u), minlength=len(lo))
        return 0.75 / h * sums

    def _build_grid(self, estimators: List[KernelHazardEstimator], grid_points: int) -> None:
        self._grid_step = self._seg_end / (grid_points - 1) if grid_points > 1 else self._seg_end
        n_seg = len(estimators)
        segments = np.repeat(np.arange(n_seg), grid_points)
        ages = np.tile(np.arange(grid_points, dtype=np.float64), n_seg) * np.repeat(self._grid_step, grid_points)
        self._grid = self._kernel_exact(segments, ages).reshape(n_seg, grid_points)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: int) -> bool:
        return int(key) in self._positions

    def index_of(self, key: int) -> int:
        try:
            return self._positions[int(key)]
        except KeyError:
            raise MissingHazardError(f"No hazard function for key {key}") from None

    def rates_at(self, ages: np.ndarray) -> np.ndarray:
        """Hazard of every key (in self.keys order) at the given per-key ages."""
        ages = np.asarray(ages, dtype=np.float64)
        rates = np.zeros(len(self.keys))
        rates[self._exp_rows] = self._param[self._exp_rows]
        rows = self._pareto_rows
        rates[rows] = 1.0 / (self._param[rows] + self._xi[rows] * ages[rows])
        rows = self._kernel_rows
        if len(rows):
            segments = self._segment[rows]
            if self.grid_points > 0:
                bucket = np.rint(ages[rows] / self._grid_step[segments]).astype(np.int64)
                beyond = bucket >= self.grid_points
                values = self._grid[segments, np.minimum(bucket, self.grid_points - 1)]
                rates[rows] = np.where(beyond, 0.0, values)
            else:
                rates[rows] = self._kernel_exact(segments, ages[rows])
        return rates

    def subset(self, keys: Iterable[int]) -> "HazardTable":
        """A table restricted to keys; raises MissingHazardError for unknown keys."""
        chosen = {}
        for key in keys:
            self.index_of(key)
            chosen[int(key)] = self.functions[int(key)]
        return HazardTable(chosen, self.grid_points)

    def rate(self, key: int, age: float) -> float:
        ages = np.zeros(len(self.keys))
        i = self.index_of(key)
        ages[i] = age
        return float(self.rates_at(ages)[i])

    def to_dict(self) -> Dict:
        return {str(k): self.functions[k].to_dict() for k in self.keys.tolist()}


def build_hazard_table(times: np.ndarray, keys: np.ndarray, wanted: Iterable[int],
                       mode: str = "kernel", bandwidth_scale: float = 1.0,
                       grid_points: int = 0) -> HazardTable:
    """
    Fit per-key hazards over a window.

    Keys with fewer than two requests share a pooled estimator fitted on all sampled
    durations combined. If no sampled key repeats, every key gets the same constant
    hazard (one request per window span), so ordering falls back to tie-breaking.
    """
    wanted = sorted(int(k) for k in wanted)
    durations = collect_all_durations(times, keys, wanted)
    samples = [d for d in (durations.get(k, np.empty(0)) for k in wanted) if len(d)]

    if samples:
        pooled = build_estimator(np.concatenate(samples), mode, bandwidth_scale)
    else:
        span = float(times[-1] - times[0]) if len(times) else 0.0
        pooled = ClosedFormHazard.exponential(1.0 / span if span > 0 else 1.0)

    hazards: Dict[int, HazardFunction] = {}
    pooled_keys = 0
    for key in wanted:
        sample = durations.get(key, np.empty(0))
        if len(sample):
            hazards[key] = build_estimator(sample, mode, bandwidth_scale)
        else:
            hazards[key] = pooled
            pooled_keys += 1
    logger.debug(f"Fitted {len(wanted) - pooled_keys} {mode} hazards, {pooled_keys} keys use the pooled fallback")
    return HazardTable(hazards, grid_points=grid_points)


def synthetic_hazards(configs: Union[SyntheticConfig, Sequence[SyntheticConfig]]) -> Dict[int, ClosedFormHazard]:
    """True closed-form hazard of every key produced by generate_synthetic / generate_mixed."""
    if isinstance(configs, SyntheticConfig):
        configs = [configs]
    hazards: Dict[int, ClosedFormHazard] = {}
    offset = 0
    for config in configs:
        scales = object_scales(config)
        for rank, scale in enumerate(scales.tolist(), start=1):
            key = offset + rank
            if config.interarrival.kind == "poisson":
                hazards[key] = ClosedFormHazard.exponential(scale)
            else:
                hazards[key] = ClosedFormHazard.generalized_pareto(scale, config.interarrival.xi)
        offset += config.n_objects
    return hazards
