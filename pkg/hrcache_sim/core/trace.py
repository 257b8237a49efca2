"""
Request traces: parsing, serialization, synthetic generation and summary statistics.
"""

import gzip
import io
import logging
import math
from dataclasses import asdict, dataclass
from typing import IO, Dict, Iterable, Iterator, List, NamedTuple, Sequence, Union

import numpy as np

from hrcache_sim.core.config import SizeModel, SyntheticConfig
from hrcache_sim.core.errors import ConfigError, EmptyTraceError, TraceParseError

logger = logging.getLogger(__name__)

GZIP_MAGIC = b"\x1f\x8b"
MAX_KEY = 2 ** 64 - 1


class Request(NamedTuple):
    """One trace record."""

    time: float
    key: int
    size: int


class Trace:
    """
    An immutable, time-ordered sequence of requests.

    Columns are stored as numpy arrays; iteration yields Request tuples.
    """

    def __init__(self, times, keys, sizes, source: str = ""):
        self.times = np.asarray(times, dtype=np.float64)
        self.keys = np.asarray(keys, dtype=np.uint64)
        self.sizes = np.asarray(sizes, dtype=np.int64)
        if not (len(self.times) == len(self.keys) == len(self.sizes)):
            raise ValueError("Trace columns must have equal length")
        for column in (self.times, self.keys, self.sizes):
            column.setflags(write=False)
        self.source = source

    @classmethod
    def from_requests(cls, requests: Iterable[Request], source: str = "") -> "Trace":
        requests = list(requests)
        return cls(
            [r.time for r in requests],
            [r.key for r in requests],
            [r.size for r in requests],
            source=source,
        )

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Request]:
        for t, k, s in zip(self.times.tolist(), self.keys.tolist(), self.sizes.tolist()):
            yield Request(t, k, s)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Trace(self.times[index], self.keys[index], self.sizes[index], self.source)
        return Request(float(self.times[index]), int(self.keys[index]), int(self.sizes[index]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.sizes, other.sizes)
        )

    @property
    def requests(self) -> List[Request]:
        return list(self)

    def __repr__(self) -> str:
        return f"Trace({len(self)} requests, source={self.source!r})"


@dataclass(frozen=True)
class TraceStats:
    """Summary statistics of a trace."""

    total_requests: int
    unique_objects: int
    total_bytes: int
    unique_bytes: int
    mean_size: float
    max_size: int

    def to_dict(self) -> Dict[str, Union[int, float]]:
        return asdict(self)


def _parse_line(parts: List[str], line_number: int) -> Request:
    if len(parts) != 3:
        raise TraceParseError(f"expected 3 fields 'time key size', got {len(parts)}", line_number)
    try:
        time = float(parts[0])
        key = int(parts[1])
        size = int(parts[2])
    except ValueError:
        raise TraceParseError(f"non-numeric field in {' '.join(parts)!r}", line_number) from None
    if not math.isfinite(time) or time < 0:
        raise TraceParseError(f"time must be a non-negative number, got {parts[0]}", line_number)
    if not 0 <= key <= MAX_KEY:
        raise TraceParseError(f"key must fit in 64 bits, got {parts[1]}", line_number)
    if size <= 0:
        raise TraceParseError(f"size must be positive, got {size}", line_number)
    return Request(time, key, size)


def _text_lines(stream: Union[IO[bytes], IO[str]]) -> Iterator[str]:
    """Yield decoded lines, transparently unwrapping gzip input."""
    head = stream.read(0)
    if isinstance(head, str):
        yield from stream
        return
    buffered = io.BufferedReader(stream) if not hasattr(stream, "peek") else stream
    if buffered.peek(2)[:2] == GZIP_MAGIC:
        buffered = gzip.GzipFile(fileobj=buffered)
    yield from io.TextIOWrapper(buffered, encoding="utf-8")


def parse_trace(stream: Union[IO[bytes], IO[str]], format: str = "plain", strict: bool = True,
                source: str = "") -> Trace:
    """
    Parse a whitespace-separated "time key size" trace.

    Args:
        stream: Binary (plain or gzip) or text stream
        format: Trace format; only "plain" is supported
        strict: Reject objects whose size changes; otherwise keep the first-seen size
        source: Description stored on the trace

    Returns:
        Trace with one request per non-blank line, in file order
    """
    if format != "plain":
        raise ConfigError(f"Unsupported trace format: {format}")

    times: List[float] = []
    keys: List[int] = []
    sizes: List[int] = []
    known_sizes: Dict[int, int] = {}
    normalized = 0
    last_time = -math.inf

    for line_number, line in enumerate(_text_lines(stream), start=1):
        parts = line.split()
        if not parts:
            continue
        request = _parse_line(parts, line_number)
        if request.time < last_time:
            raise TraceParseError(
                f"timestamps must be non-decreasing ({request.time} after {last_time})", line_number)
        last_time = request.time

        size = request.size
        first_size = known_sizes.setdefault(request.key, size)
        if first_size != size:
            if strict:
                raise TraceParseError(
                    f"key {request.key} has size {size}, previously {first_size}", line_number)
            size = first_size
            normalized += 1

        times.append(request.time)
        keys.append(request.key)
        sizes.append(size)

    if normalized:
        logger.warning(f"Normalized {normalized} requests with changed object sizes to first-seen size")
    return Trace(times, keys, sizes, source=source)


def load_trace(path: str, strict: bool = True) -> Trace:
    """Open a plain or gzip-compressed trace file and parse it."""
    with open(path, "rb") as f:
        trace = parse_trace(f, strict=strict, source=path)
    logger.info(f"Loaded {len(trace)} requests from {path}")
    return trace


def _format_time(time: float) -> str:
    return str(int(time)) if time.is_integer() else repr(time)


def serialize_trace(trace: Trace) -> str:
    """Render a trace in the plain format."""
    return "".join(f"{_format_time(r.time)} {r.key} {r.size}\n" for r in trace)


def write_trace(trace: Trace, path: str) -> None:
    """Write a trace to disk, gzip-compressed when the path ends with .gz."""
    data = serialize_trace(trace).encode("utf-8")
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "wb") as f:
        f.write(data)
    logger.info(f"Wrote {len(trace)} requests to {path}")


def trace_stats(trace: Trace) -> TraceStats:
    """Compute request and byte counts of a trace."""
    if len(trace) == 0:
        raise EmptyTraceError("trace_stats needs a non-empty trace")
    unique_keys, first_index = np.unique(trace.keys, return_index=True)
    total_bytes = int(trace.sizes.sum())
    return TraceStats(
        total_requests=len(trace),
        unique_objects=len(unique_keys),
        total_bytes=total_bytes,
        unique_bytes=int(trace.sizes[first_index].sum()),
        mean_size=total_bytes / len(trace),
        max_size=int(trace.sizes.max()),
    )


def zipf_popularity(n_objects: int, alpha: float) -> np.ndarray:
    """Request probability of each rank 1..n under Zipf(alpha)."""
    weights = np.arange(1, n_objects + 1, dtype=np.float64) ** -alpha
    return weights / weights.sum()


def _draw_sizes(model: SizeModel, n_objects: int, rng: np.random.Generator) -> np.ndarray:
    if model.kind == "constant":
        return np.full(n_objects, model.bytes, dtype=np.int64)
    raw = np.rint(rng.lognormal(model.mu, model.sigma_ln, size=n_objects))
    return np.maximum(raw, 1).astype(np.int64)


def object_scales(config: SyntheticConfig) -> np.ndarray:
    """
    Per-object parameter of the inter-request model.

    Poisson: the object's request rate. Generalized Pareto: the object's scale sigma.
    """
    p = zipf_popularity(config.n_objects, config.popularity_alpha)
    model = config.interarrival
    if model.kind == "poisson":
        return model.rate * p
    return model.sigma / (config.n_objects * p)


def _draw_gaps(config: SyntheticConfig, scale: float, count: int, rng: np.random.Generator) -> np.ndarray:
    model = config.interarrival
    if model.kind == "poisson":
        return rng.exponential(1.0 / scale, size=count)
    if model.xi == 0:
        return rng.exponential(scale, size=count)
    u = rng.random(size=count)
    return scale / model.xi * ((1.0 - u) ** -model.xi - 1.0)


def _mean_gap(config: SyntheticConfig, scale: float) -> float:
    model = config.interarrival
    if model.kind == "poisson":
        return 1.0 / scale
    # heavy tails have no finite mean; the horizon search below grows as needed
    return scale / (1.0 - model.xi) if model.xi < 1 else scale


def _arrivals_until(config: SyntheticConfig, scale: float, horizon: float,
                    rng: np.random.Generator) -> np.ndarray:
    expected = horizon / _mean_gap(config, scale)
    chunk = int(expected + 5 * math.sqrt(expected) + 2)
    times = np.cumsum(_draw_gaps(config, scale, chunk, rng))
    while times[-1] <= horizon:
        more = np.cumsum(_draw_gaps(config, scale, chunk, rng)) + times[-1]
        times = np.concatenate([times, more])
    return times[times <= horizon]


def generate_synthetic(config: SyntheticConfig, key_offset: int = 0) -> Trace:
    """
    Generate a trace where each object is an independent renewal process.

    Object k (1-based rank) has Zipf(alpha) popularity; its gaps follow the configured
    inter-request model. The merged stream is ordered by (time, key) and cut to
    n_requests. The result is a pure function of the config.
    """
    config.validate()
    seed_seq = np.random.SeedSequence(config.seed)
    size_seq, gap_seq = seed_seq.spawn(2)
    sizes = _draw_sizes(config.size_model, config.n_objects, np.random.default_rng(size_seq))
    scales = object_scales(config)

    total_rate = sum(1.0 / _mean_gap(config, s) for s in scales)
    horizon = 1.2 * config.n_requests / total_rate
    while True:
        rng = np.random.default_rng(gap_seq)
        per_object = [_arrivals_until(config, s, horizon, rng) for s in scales]
        if sum(len(t) for t in per_object) >= config.n_requests:
            break
        horizon *= 1.5

    times = np.concatenate(per_object)
    ranks = np.concatenate([np.full(len(t), k, dtype=np.int64) for k, t in enumerate(per_object)])
    order = np.lexsort((ranks, times))[: config.n_requests]
    ranks = ranks[order]
    keys = ranks.astype(np.uint64) + np.uint64(key_offset + 1)

    source = (f"synthetic(n_objects={config.n_objects}, alpha={config.popularity_alpha}, "
              f"{config.interarrival.kind}, seed={config.seed})")
    logger.info(f"Generated {config.n_requests} requests over {config.n_objects} objects")
    return Trace(times[order], keys, sizes[ranks], source=source)


def generate_mixed(configs: Sequence[SyntheticConfig]) -> Trace:
    """Merge several traffic classes with disjoint key ranges into one trace."""
    if not configs:
        raise ConfigError("generate_mixed needs at least one traffic class")
    parts = []
    offset = 0
    for config in configs:
        parts.append(generate_synthetic(config, key_offset=offset))
        offset += config.n_objects
    times = np.concatenate([p.times for p in parts])
    keys = np.concatenate([p.keys for p in parts])
    sizes = np.concatenate([p.sizes for p in parts])
    order = np.lexsort((keys, times))
    return Trace(times[order], keys[order], sizes[order],
                 source=f"mixed({len(configs)} classes)")
