"""
Per-object request history and the classifier's feature vectors.

Each vector holds 32 inter-request deltas (most recent first), a lazily decayed
request count and the object size. Features for a request are always built from
history strictly before that request.
"""

import csv
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Deque, Dict, Iterable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from hrcache_sim.core.errors import TraceParseError
from hrcache_sim.core.trace import Request, Trace

logger = logging.getLogger(__name__)

SENTINEL = float(2 ** 31 - 1)
N_DELTAS = 32
HISTORY = N_DELTAS + 1
N_FEATURES = N_DELTAS + 2
FEATURE_NAMES = [f"d{i}" for i in range(1, N_DELTAS + 1)] + ["decayed_freq", "size"]


@dataclass
class ObjectState:
    key: int
    size: int
    last_times: Deque[float] = field(default_factory=lambda: deque(maxlen=HISTORY))
    decayed_count: float = 0.0
    last_update_seq: int = 0

    def decayed_at(self, seq: int, decay: float) -> float:
        return self.decayed_count * decay ** (seq - self.last_update_seq)


class FeatureVector(NamedTuple):
    deltas: Tuple[float, ...]
    decayed_frequency: float
    size: float

    def to_array(self) -> np.ndarray:
        return np.asarray(self.deltas + (self.decayed_frequency, self.size), dtype=np.float64)


def _fill_row(row: np.ndarray, state: Optional[ObjectState], now: float, seq: int,
              decay: float, size: float) -> None:
    row[:N_DELTAS] = SENTINEL
    if state is None or not state.last_times:
        row[N_DELTAS] = 0.0
        row[N_DELTAS + 1] = size
        return
    newest_first = np.asarray(state.last_times, dtype=np.float64)[::-1]
    row[0] = now - newest_first[0]
    gaps = (newest_first[:-1] - newest_first[1:])[: N_DELTAS - 1]
    row[1:1 + len(gaps)] = gaps
    row[N_DELTAS] = state.decayed_at(seq, decay)
    row[N_DELTAS + 1] = state.size


def build_features(state: Optional[ObjectState], now: float, seq: int, decay: float = 0.9,
                   size: float = 0.0) -> FeatureVector:
    """
    Feature vector of an object at time now, without mutating its state.

    size is only used for objects with no state.
    """
    row = np.empty(N_FEATURES)
    _fill_row(row, state, now, seq, decay, size)
    return FeatureVector(tuple(row[:N_DELTAS].tolist()), float(row[N_DELTAS]), float(row[N_DELTAS + 1]))


class FeatureTable:
    """Online per-object history, updated in request order."""

    def __init__(self, decay: float = 0.9):
        self.decay = decay
        self.states: Dict[int, ObjectState] = {}
        self.last_seq = 0

    def __len__(self) -> int:
        return len(self.states)

    def __contains__(self, key: int) -> bool:
        return key in self.states

    def copy(self) -> "FeatureTable":
        """Independent snapshot of every object's history."""
        snapshot = FeatureTable(self.decay)
        for key, state in self.states.items():
            snapshot.states[key] = ObjectState(key, state.size, deque(state.last_times, maxlen=HISTORY),
                                               state.decayed_count, state.last_update_seq)
        snapshot.last_seq = self.last_seq
        return snapshot

    def get(self, key: int) -> Optional[ObjectState]:
        return self.states.get(key)

    def touch(self, request: Request, global_seq: int) -> ObjectState:
        """Record a request: lazy decay of the count, then append its time."""
        state = self.states.get(request.key)
        if state is None:
            state = ObjectState(request.key, request.size)
            self.states[request.key] = state
        state.decayed_count = state.decayed_at(global_seq, self.decay) + 1.0
        state.last_update_seq = global_seq
        state.last_times.append(request.time)
        state.size = request.size
        self.last_seq = global_seq
        return state

    def build_features(self, key: int, now: float, seq: Optional[int] = None, size: float = 0.0) -> FeatureVector:
        if seq is None:
            seq = self.last_seq + 1
        return build_features(self.states.get(key), now, seq, self.decay, size)

    def build_matrix(self, requests: Iterable[Request], seqs: Iterable[int]) -> np.ndarray:
        """Feature rows for a batch, all read from the current snapshot."""
        requests = list(requests)
        matrix = np.empty((len(requests), N_FEATURES))
        for row, request, seq in zip(matrix, requests, seqs):
            _fill_row(row, self.states.get(request.key), request.time, seq, self.decay, request.size)
        return matrix

    def collect_garbage(self, now: float, idle: float) -> int:
        """Drop objects not requested within idle time units of now."""
        stale = [k for k, s in self.states.items() if now - s.last_times[-1] > idle]
        for key in stale:
            del self.states[key]
        if stale:
            logger.debug(f"Dropped {len(stale)} idle objects from the feature table")
        return len(stale)


def replay_features(window: Trace, decay: float = 0.9, indices: Optional[Iterable[int]] = None,
                    table: Optional[FeatureTable] = None) -> np.ndarray:
    """
    Features of window requests, replayed on top of the history in table.

    table is the feature state at the window start (left untouched); without it the
    replay starts from an empty table. Each row is built before its own request is
    recorded. With indices, only those rows are returned (in the given order).
    """
    table = table.copy() if table is not None else FeatureTable(decay)
    decay = table.decay
    offset = table.last_seq
    matrix = np.empty((len(window), N_FEATURES))
    for i, request in enumerate(window):
        seq = offset + i + 1
        _fill_row(matrix[i], table.states.get(request.key), request.time, seq, decay, request.size)
        table.touch(request, seq)
    if indices is not None:
        return matrix[np.asarray(list(indices), dtype=np.int64)]
    return matrix


def _format_value(value: float) -> str:
    return str(int(value)) if value.is_integer() else repr(value)


def write_training_csv(path: Union[str, Path], features: np.ndarray, labels: Iterable[int]) -> None:
    """Dump rows with the fixed header d1..d32,decayed_freq,size,label."""
    labels = list(labels)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(FEATURE_NAMES + ["label"])
        for row, label in zip(features.tolist(), labels):
            writer.writerow([_format_value(v) for v in row] + [int(label)])
    logger.info(f"Wrote {len(labels)} training rows to {path}")


def read_training_csv(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != FEATURE_NAMES + ["label"]:
            raise TraceParseError(f"{path}: unexpected training CSV header", line_number=1)
        rows: List[List[float]] = []
        labels: List[int] = []
        for line_number, record in enumerate(reader, start=2):
            if len(record) != N_FEATURES + 1:
                raise TraceParseError(f"expected {N_FEATURES + 1} columns, got {len(record)}", line_number)
            try:
                rows.append([float(v) for v in record[:N_FEATURES]])
                labels.append(int(record[N_FEATURES]))
            except ValueError as e:
                raise TraceParseError(str(e), line_number) from None
    return np.asarray(rows, dtype=np.float64).reshape(-1, N_FEATURES), np.asarray(labels, dtype=np.int64)
