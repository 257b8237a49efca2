#!/usr/bin/env python3
import gzip
import io
import os
import sys
import tempfile
import unittest

import numpy as np

# Add the parent directory to sys.path to allow importing the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hrcache_sim.core.config import InterarrivalModel, SizeModel, SyntheticConfig
from hrcache_sim.core.errors import ConfigError, EmptyTraceError, TraceParseError
from hrcache_sim.core.trace import (Request, Trace, generate_mixed, generate_synthetic, load_trace, parse_trace,
                                    serialize_trace, trace_stats, write_trace, zipf_popularity)


class TestParseTrace(unittest.TestCase):
    def test_plain_lines(self):
        """Each line becomes one request in file order."""
        trace = parse_trace(io.StringIO("0 1 100\n2 2 50\n3 1 100\n"))
        self.assertEqual(len(trace), 3)
        self.assertEqual(trace.keys.tolist(), [1, 2, 1])
        self.assertEqual(trace[1], Request(2.0, 2, 50))

    def test_size_conflict_strict(self):
        """A key changing size is an error in strict mode."""
        with self.assertRaises(TraceParseError) as ctx:
            parse_trace(io.StringIO("0 1 100\n1 1 200\n"))
        self.assertEqual(ctx.exception.line_number, 2)

    def test_size_conflict_lenient(self):
        """Lenient mode keeps the first-seen size."""
        trace = parse_trace(io.StringIO("0 1 100\n1 1 200\n"), strict=False)
        self.assertEqual(trace.sizes.tolist(), [100, 100])

    def test_zero_size_rejected(self):
        with self.assertRaises(TraceParseError):
            parse_trace(io.StringIO("5 7 0\n"))

    def test_decreasing_time_rejected(self):
        with self.assertRaises(TraceParseError) as ctx:
            parse_trace(io.StringIO("5 1 1\n4 2 1\n"))
        self.assertIn("line 2", str(ctx.exception))

    def test_malformed_fields(self):
        for text in ("0 1\n", "a 1 1\n", "0 -1 5\n", f"0 {2 ** 64} 5\n"):
            with self.assertRaises(TraceParseError, msg=text):
                parse_trace(io.StringIO(text))

    def test_blank_lines_skipped(self):
        trace = parse_trace(io.StringIO("\n0 1 1\n\n1 2 1\n"))
        self.assertEqual(len(trace), 2)

    def test_gzip_stream(self):
        """Binary streams are decompressed when they carry the gzip magic bytes."""
        data = gzip.compress(b"0 1 100\n1 2 50\n")
        trace = parse_trace(io.BytesIO(data))
        self.assertEqual(trace.keys.tolist(), [1, 2])

    def test_unknown_format(self):
        with self.assertRaises(ConfigError):
            parse_trace(io.StringIO(""), format="csv")


class TestTraceFiles(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.trace = Trace([0.0, 1.5, 2.0], [3, 2 ** 64 - 1, 3], [10, 20, 10])

    def tearDown(self):
        self.tmp.cleanup()

    def test_serialize_format(self):
        self.assertEqual(serialize_trace(self.trace), f"0 3 10\n1.5 {2 ** 64 - 1} 20\n2 3 10\n")

    def test_write_and_load(self):
        """Plain and gzip files load back to the same trace."""
        for name in ("trace.txt", "trace.txt.gz"):
            path = os.path.join(self.tmp.name, name)
            write_trace(self.trace, path)
            self.assertEqual(load_trace(path), self.trace)


class TestTraceStats(unittest.TestCase):
    def test_counts(self):
        trace = Trace([0, 1, 2], [1, 2, 1], [100, 50, 100])
        stats = trace_stats(trace)
        self.assertEqual(stats.total_requests, 3)
        self.assertEqual(stats.unique_objects, 2)
        self.assertEqual(stats.total_bytes, 250)
        self.assertEqual(stats.unique_bytes, 150)
        self.assertAlmostEqual(stats.mean_size, 250 / 3)
        self.assertEqual(stats.max_size, 100)

    def test_singleton(self):
        stats = trace_stats(Trace([0], [1], [7]))
        self.assertEqual(stats.to_dict(), {
            "total_requests": 1, "unique_objects": 1, "total_bytes": 7,
            "unique_bytes": 7, "mean_size": 7.0, "max_size": 7,
        })

    def test_empty(self):
        with self.assertRaises(EmptyTraceError):
            trace_stats(Trace([], [], []))


class TestSyntheticGenerator(unittest.TestCase):
    def setUp(self):
        self.config = SyntheticConfig(n_objects=100, n_requests=10_000, popularity_alpha=0.8,
                                      interarrival=InterarrivalModel.poisson(1.0), seed=7)

    def test_single_object(self):
        config = SyntheticConfig(n_objects=1, n_requests=5, interarrival=InterarrivalModel.poisson(1.0),
                                 size_model=SizeModel.constant(1), seed=42)
        trace = generate_synthetic(config)
        self.assertEqual(len(trace), 5)
        self.assertEqual(set(trace.keys.tolist()), {1})
        self.assertTrue(np.all(np.diff(trace.times) > 0))

    def test_rank_one_most_popular(self):
        trace = generate_synthetic(self.config)
        self.assertEqual(len(trace), 10_000)
        counts = np.bincount(trace.keys.astype(np.int64))
        self.assertEqual(int(np.argmax(counts)), 1)

    def test_deterministic(self):
        """The same config generates byte-identical traces."""
        first = serialize_trace(generate_synthetic(self.config))
        second = serialize_trace(generate_synthetic(self.config))
        self.assertEqual(first, second)

    def test_time_ordered(self):
        trace = generate_synthetic(self.config)
        self.assertTrue(np.all(np.diff(trace.times) >= 0))

    def test_pareto_sizes(self):
        config = SyntheticConfig(n_objects=50, n_requests=2_000,
                                 interarrival=InterarrivalModel.generalized_pareto(1.0, 0.3),
                                 size_model=SizeModel.lognormal(6.0, 1.0), seed=3)
        trace = generate_synthetic(config)
        self.assertEqual(len(trace), 2_000)
        stats = trace_stats(trace)
        self.assertGreater(stats.max_size, 1)
        # every key keeps one size
        for key in np.unique(trace.keys):
            self.assertEqual(len(np.unique(trace.sizes[trace.keys == key])), 1)

    def test_zipf_alpha_zero(self):
        np.testing.assert_allclose(zipf_popularity(4, 0.0), np.full(4, 0.25))

    def test_invalid_alpha(self):
        with self.assertRaises(ConfigError):
            SyntheticConfig.from_dict({"n_objects": 10, "n_requests": 10, "popularity_alpha": -1})

    def test_mixed_disjoint_keys(self):
        """Traffic classes get disjoint key ranges and merge in time order."""
        second = SyntheticConfig(n_objects=20, n_requests=500, popularity_alpha=1.2,
                                 interarrival=InterarrivalModel.poisson(2.0), seed=9)
        small = SyntheticConfig(n_objects=10, n_requests=500, interarrival=InterarrivalModel.poisson(1.0), seed=1)
        trace = generate_mixed([small, second])
        self.assertEqual(len(trace), 1_000)
        keys = set(trace.keys.tolist())
        self.assertTrue(keys <= set(range(1, 31)))
        self.assertTrue(any(k > 10 for k in keys))
        self.assertTrue(np.all(np.diff(trace.times) >= 0))


if __name__ == '__main__':
    unittest.main()
