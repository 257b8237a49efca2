#!/usr/bin/env python3
import os
import sys
import tempfile
import unittest

import numpy as np

# Add the parent directory to sys.path to allow importing the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hrcache_sim.core.errors import TraceParseError
from hrcache_sim.core.features import (FEATURE_NAMES, N_FEATURES, SENTINEL, FeatureTable, build_features,
                                       read_training_csv, replay_features, write_training_csv)
from hrcache_sim.core.trace import Request, Trace


class TestFeatureTable(unittest.TestCase):
    def setUp(self):
        self.table = FeatureTable(decay=0.9)

    def test_decay_consecutive(self):
        for seq in (1, 2, 3):
            state = self.table.touch(Request(seq, 1, 10), seq)
        self.assertAlmostEqual(state.decayed_count, 2.71)

    def test_first_touch(self):
        self.assertEqual(self.table.touch(Request(0, 1, 10), 1).decayed_count, 1.0)

    def test_decay_gap(self):
        self.table.touch(Request(0, 1, 10), 1)
        state = self.table.touch(Request(5, 1, 10), 11)
        self.assertAlmostEqual(state.decayed_count, 0.9 ** 10 + 1)

    def test_decay_bound(self):
        """The count approaches 1 / (1 - decay) from below."""
        previous = 0.0
        for seq in range(1, 200):
            count = self.table.touch(Request(seq, 1, 1), seq).decayed_count
            self.assertGreater(count, previous)
            self.assertLessEqual(count, 10.0)
            previous = count

    def test_deltas(self):
        for seq, t in enumerate((10, 17), start=1):
            self.table.touch(Request(t, 1, 10), seq)
        vector = self.table.build_features(1, now=30)
        self.assertEqual(vector.deltas[:2], (13.0, 7.0))
        self.assertTrue(all(d == SENTINEL for d in vector.deltas[2:]))
        self.assertEqual(len(vector.to_array()), N_FEATURES)
        self.assertEqual(vector.size, 10.0)

    def test_never_seen(self):
        vector = self.table.build_features(42, now=5, size=7)
        self.assertEqual(vector.deltas, (SENTINEL,) * 32)
        self.assertEqual(vector.decayed_frequency, 0.0)
        self.assertEqual(vector.size, 7.0)

    def test_seen_once(self):
        self.table.touch(Request(5, 1, 3), 1)
        vector = self.table.build_features(1, now=9)
        self.assertEqual(vector.deltas[0], 4.0)
        self.assertEqual(vector.deltas[1], SENTINEL)

    def test_history_capped(self):
        for seq in range(1, 51):
            self.table.touch(Request(seq * 2, 1, 1), seq)
        vector = self.table.build_features(1, now=101)
        self.assertEqual(vector.deltas[0], 1.0)
        self.assertTrue(all(d == 2.0 for d in vector.deltas[1:]))
        self.assertEqual(len(self.table.get(1).last_times), 33)

    def test_build_is_pure(self):
        self.table.touch(Request(0, 1, 1), 1)
        before = self.table.get(1).decayed_count
        first = self.table.build_features(1, now=3, seq=5)
        second = self.table.build_features(1, now=3, seq=5)
        self.assertEqual(first, second)
        self.assertEqual(self.table.get(1).decayed_count, before)
        self.assertAlmostEqual(first.decayed_frequency, 0.9 ** 4)

    def test_matrix_matches_vectors(self):
        requests = [Request(0, 1, 5), Request(1, 2, 6), Request(3, 1, 5)]
        for seq, request in enumerate(requests, start=1):
            self.table.touch(request, seq)
        batch = [Request(4, 1, 5), Request(4, 3, 9)]
        matrix = self.table.build_matrix(batch, [4, 5])
        np.testing.assert_array_equal(matrix[0], self.table.build_features(1, 4, 4).to_array())
        np.testing.assert_array_equal(matrix[1], build_features(None, 4, 5, 0.9, 9).to_array())

    def test_copy_is_independent(self):
        self.table.touch(Request(0, 1, 4), 1)
        snapshot = self.table.copy()
        self.table.touch(Request(3, 1, 4), 2)
        self.table.touch(Request(4, 2, 4), 3)
        self.assertEqual(list(snapshot.get(1).last_times), [0])
        self.assertEqual(snapshot.get(1).decayed_count, 1.0)
        self.assertNotIn(2, snapshot)
        self.assertEqual(snapshot.last_seq, 1)

    def test_collect_garbage(self):
        self.table.touch(Request(0, 1, 1), 1)
        self.table.touch(Request(90, 2, 1), 2)
        self.assertEqual(self.table.collect_garbage(now=100, idle=50), 1)
        self.assertNotIn(1, self.table)
        self.assertIn(2, self.table)


class TestReplayFeatures(unittest.TestCase):
    def test_no_leakage(self):
        """A request's own time never appears in its features."""
        window = Trace([0, 2, 5, 5], [1, 2, 1, 1], [4, 4, 4, 4])
        rows = replay_features(window)
        self.assertEqual(rows[0][0], SENTINEL)
        self.assertEqual(rows[2][0], 5.0)
        self.assertEqual(rows[3][0], 0.0)
        self.assertEqual(rows[3][1], 5.0)
        self.assertEqual(rows[0][32], 0.0)

    def test_indices(self):
        window = Trace([0, 2, 5], [1, 2, 1], [4, 4, 4])
        rows = replay_features(window, indices=[2, 0])
        self.assertEqual(rows.shape, (2, N_FEATURES))
        self.assertEqual(rows[0][0], 5.0)

    def test_continues_from_table(self):
        """Replaying on a table matches touching the window onto it request by request."""
        table = FeatureTable(0.9)
        table.touch(Request(0, 1, 4), 1)
        table.touch(Request(1, 2, 4), 2)
        window = Trace([3, 4, 6], [1, 3, 1], [4, 4, 4])
        rows = replay_features(window, 0.9, table=table)
        self.assertEqual(rows[0][0], 3.0)
        self.assertAlmostEqual(rows[0][32], 0.9 ** 2)
        self.assertEqual(rows[1][0], SENTINEL)
        self.assertEqual(rows[2][:2].tolist(), [3.0, 3.0])
        self.assertEqual(table.last_seq, 2)
        self.assertEqual(len(table.get(1).last_times), 1)
        live = table.copy()
        for seq, request in enumerate(window, start=3):
            expected = live.build_features(request.key, request.time, seq, request.size)
            np.testing.assert_array_equal(rows[seq - 3], expected.to_array())
            live.touch(request, seq)


class TestTrainingCsv(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "train.csv")

    def tearDown(self):
        self.tmp.cleanup()

    def test_header_and_rows(self):
        rows = replay_features(Trace([0, 1, 3], [1, 1, 2], [10, 10, 20]))
        write_training_csv(self.path, rows, [1, 0, 1])
        with open(self.path, encoding="utf-8") as f:
            header = f.readline().strip()
        self.assertEqual(header, ",".join(FEATURE_NAMES + ["label"]))
        self.assertTrue(header.startswith("d1,d2,") and header.endswith("d32,decayed_freq,size,label"))
        features, labels = read_training_csv(self.path)
        np.testing.assert_array_equal(features, rows)
        self.assertEqual(labels.tolist(), [1, 0, 1])

    def test_bad_header(self):
        with open(self.path, "w", encoding="utf-8") as f:
            f.write("a,b\n1,2\n")
        with self.assertRaises(TraceParseError):
            read_training_csv(self.path)


if __name__ == '__main__':
    unittest.main()
