"""
HR-Cache: a two-queue cache driven by a learned cache-friendliness classifier.

The classifier is retrained at the close of every window of requests on labels
derived from hazard rate ordering over that window. Until the first model is
trained the cache is plain LRU.
"""

import logging
from collections import OrderedDict
from enum import Enum
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np

from hrcache_sim.core.config import GbdtParams, WindowConfig
from hrcache_sim.core.features import FeatureTable, replay_features
from hrcache_sim.core.hazard import build_hazard_table
from hrcache_sim.core.model import GbdtModel, TrainingSet, train
from hrcache_sim.core.oracle import HroLabel, calibrate_sampling, derive_labels, reconstruct_hro
from hrcache_sim.core.trace import Request, Trace
from hrcache_sim.policies.base import CachePolicy

logger = logging.getLogger(__name__)

FRIENDLY_THRESHOLD = 0.5

Predictor = Callable[[np.ndarray], np.ndarray]


class Phase(str, Enum):
    WARMUP = "warmup"
    ACTIVE = "active"


class TwoQueueCache:
    """
    Main and candidate queues sharing one byte capacity.

    Both are LRU ordered (last item is MRU). Evictions drain the candidate queue
    before touching the main queue.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.main: "OrderedDict[int, int]" = OrderedDict()
        self.candidate: "OrderedDict[int, int]" = OrderedDict()
        self.used_bytes = 0
        self.evictions = 0

    def __contains__(self, key: int) -> bool:
        return key in self.main or key in self.candidate

    def queue_of(self, key: int) -> Optional[str]:
        if key in self.main:
            return "main"
        if key in self.candidate:
            return "candidate"
        return None

    def _make_room(self, size: int) -> None:
        while self.used_bytes + size > self.capacity:
            queue = self.candidate if self.candidate else self.main
            _, evicted = queue.popitem(last=False)
            self.used_bytes -= evicted
            self.evictions += 1

    def access(self, request: Request, friendly: bool) -> bool:
        key = request.key
        if key in self.candidate:
            size = self.candidate.pop(key)
            (self.main if friendly else self.candidate)[key] = size
            return True
        if key in self.main:
            if friendly:
                self.main.move_to_end(key)
            else:
                self.candidate[key] = self.main.pop(key)
            return True
        if request.size > self.capacity:
            return False
        self._make_room(request.size)
        (self.main if friendly else self.candidate)[key] = request.size
        self.used_bytes += request.size
        return False

    def check_invariants(self) -> None:
        assert not (self.main.keys() & self.candidate.keys()), "queues overlap"
        assert self.used_bytes == sum(self.main.values()) + sum(self.candidate.values())
        assert self.used_bytes <= self.capacity, "capacity exceeded"


class ConstantPredictor:
    """Predicts the same probability for every row."""

    def __init__(self, probability: float):
        self.probability = probability

    def __call__(self, features: np.ndarray) -> np.ndarray:
        return np.full(len(features), self.probability)


def first_window_boundary(trace: Trace, capacity: int, multiplier: float = 3.0) -> int:
    """Number of requests in the first window, or len(trace) if it never closes."""
    target = multiplier * capacity
    seen = set()
    unique_bytes = 0
    for index, (key, size) in enumerate(zip(trace.keys.tolist(), trace.sizes.tolist())):
        if key not in seen:
            seen.add(key)
            unique_bytes += size
            if unique_bytes >= target:
                return index + 1
    return len(trace)


class HrCachePolicy(CachePolicy):
    """
    Batched HR-Cache replay.

    Each batch predicts all its requests from one snapshot of the feature table,
    then applies them in order. A model trained when a window closes is used
    from the next batch on. With a fixed predictor the policy starts active and
    never trains.
    """

    name = "hrcache"

    def __init__(self, capacity: int, window: Optional[WindowConfig] = None,
                 gbdt: Optional[GbdtParams] = None, seed: int = 0,
                 predictor: Optional[Predictor] = None):
        super().__init__(capacity)
        self.window = window or WindowConfig()
        self.window.validate()
        self.gbdt = gbdt or GbdtParams()
        self.seed = seed
        self.cache = TwoQueueCache(capacity)
        self.features = FeatureTable(self.window.decay)
        # feature state when the open window started, the base of its training rows
        self.window_start_features = FeatureTable(self.window.decay)
        self.fixed_predictor = predictor
        self.model: Optional[GbdtModel] = None
        self.seq = 0

        self.window_requests: List[Request] = []
        self.window_keys = set()
        self.window_bytes = 0

        self.windows_closed = 0
        self.windows_trained = 0
        self.windows_skipped = 0
        self.predictions_made = 0
        self.features_built = 0
        self.prediction_calls = 0

    @property
    def phase(self) -> Phase:
        if self.fixed_predictor is not None or self.model is not None:
            return Phase.ACTIVE
        return Phase.WARMUP

    def contains(self, key: int) -> bool:
        return key in self.cache

    def on_request(self, request: Request) -> bool:
        return self.process_batch([request])[0]

    def process_batch(self, requests: Iterable[Request]) -> List[bool]:
        requests = list(requests)
        hits: List[bool] = []
        size = self.window.batch_size
        for start in range(0, len(requests), size):
            hits.extend(self._replay_batch(requests[start:start + size]))
        return hits

    def _predict(self, batch: List[Request]) -> List[bool]:
        predictor = self.fixed_predictor
        if predictor is None:
            if self.model is None:
                return [True] * len(batch)
            predictor = self.model.predict_proba
        seqs = range(self.seq + 1, self.seq + 1 + len(batch))
        matrix = self.features.build_matrix(batch, seqs)
        probabilities = predictor(matrix)
        self.features_built += len(batch)
        self.predictions_made += len(batch)
        self.prediction_calls += 1
        return (np.asarray(probabilities) > FRIENDLY_THRESHOLD).tolist()

    def _replay_batch(self, batch: List[Request]) -> List[bool]:
        friendly = self._predict(batch)
        hits = []
        for request, is_friendly in zip(batch, friendly):
            self.seq += 1
            hits.append(self.cache.access(request, is_friendly))
            self.features.touch(request, self.seq)
            self._accumulate(request)
        self.used_bytes = self.cache.used_bytes
        return hits

    def _accumulate(self, request: Request) -> None:
        self.window_requests.append(request)
        if request.key not in self.window_keys:
            self.window_keys.add(request.key)
            self.window_bytes += request.size
        if self.window_bytes >= self.window.multiplier * self.capacity:
            self.window_advance()

    def window_advance(self) -> Optional[GbdtModel]:
        """
        Close the current window: label it, train a model and reset the accumulator.

        Returns the new model, or None when training was skipped.
        """
        if not self.window_requests:
            return None
        window = Trace.from_requests(self.window_requests)
        self.windows_closed += 1
        self.window_requests = []
        self.window_keys = set()
        self.window_bytes = 0

        span = float(window.times[-1] - window.times[0])
        self.features.collect_garbage(float(window.times[-1]), span)
        if self.fixed_predictor is not None:
            return None

        model = self.train_window(window, self.window_start_features)
        self.window_start_features = self.features.copy()
        if model is None:
            self.windows_skipped += 1
            return None
        was_warmup = self.model is None
        self.model = model
        self.windows_trained += 1
        if was_warmup:
            logger.info(f"First model trained after {self.seq} requests, leaving warmup")
        return model

    def train_window(self, window: Trace, history: Optional[FeatureTable] = None) -> Optional[GbdtModel]:
        data = window_training_set(window, self.capacity, self.window, self.seed + self.windows_closed, history)
        if data is None:
            return None
        model = train(data, self.gbdt)
        logger.info(f"Window {self.windows_closed}: trained on {len(data)} labels "
                    f"({data.labels.mean():.1%} cache-friendly)")
        return model


def window_labels(window: Trace, capacity: int, config: WindowConfig, seed: int) -> List[HroLabel]:
    """Sample keys, fit their hazards and label the window by hazard rate ordering."""
    plan = calibrate_sampling(window, config.op_budget, seed, config.sampling_cost)
    logger.debug(f"Labeling {len(window)} requests with {len(plan)} sampled keys")
    hazards = build_hazard_table(window.times, window.keys, plan.sampled_keys, mode=config.hazard_mode,
                                 bandwidth_scale=config.bandwidth_scale,
                                 grid_points=config.hazard_grid_points)
    marks = reconstruct_hro(window, plan, hazards, capacity, config.label_mode,
                            random_ties=config.random_ties, seed=seed)
    return derive_labels(window, marks, config.look_back)


def window_training_set(window: Trace, capacity: int, config: WindowConfig, seed: int,
                        history: Optional[FeatureTable] = None) -> Optional[TrainingSet]:
    """
    Labeled, leakage-free feature rows of one window, or None below min_labels.

    history is the feature table as it stood when the window opened; without it
    rows are replayed from an empty table.
    """
    labels = window_labels(window, capacity, config, seed)
    if len(labels) < config.min_labels:
        logger.warning(f"Window of {len(window)} requests produced {len(labels)} labels "
                       f"(< {config.min_labels}), skipping training")
        return None
    rows = replay_features(window, config.decay, [label.request_index for label in labels], history)
    targets = np.asarray([1 if label.cache_friendly else 0 for label in labels])
    return TrainingSet(rows, targets)


def split_windows(trace: Trace, capacity: int, multiplier: float = 3.0) -> List[Tuple[int, int]]:
    """[start, end) request ranges of consecutive windows; a trailing partial window is dropped."""
    target = multiplier * capacity
    bounds = []
    start = 0
    seen = set()
    unique_bytes = 0
    for index, (key, size) in enumerate(zip(trace.keys.tolist(), trace.sizes.tolist())):
        if key not in seen:
            seen.add(key)
            unique_bytes += size
        if unique_bytes >= target:
            bounds.append((start, index + 1))
            start = index + 1
            seen = set()
            unique_bytes = 0
    return bounds
