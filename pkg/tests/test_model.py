#!/usr/bin/env python3
import os
import sys
import tempfile
import unittest

import numpy as np

# Add the parent directory to sys.path to allow importing the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from hrcache_sim.core.config import GbdtParams
from hrcache_sim.core.errors import ConfigError, InsufficientDataError, ModelFormatError
from hrcache_sim.core.features import N_FEATURES, SENTINEL, FeatureVector
from hrcache_sim.core.model import (BinMap, GbdtModel, TrainingSet, fit_bins, load_model, predict,
                                    predict_batch, save_model, train)


def toy_set(n_rows=10_000, seed=0):
    """Rows whose label is d1 < 100, with noise in the other columns."""
    rng = np.random.default_rng(seed)
    features = rng.uniform(0, 1_000, size=(n_rows, N_FEATURES))
    features[:, 0] = rng.uniform(0, 200, size=n_rows)
    features[rng.random(n_rows) < 0.05, 0] = SENTINEL
    labels = (features[:, 0] < 100).astype(int)
    return TrainingSet(features, labels)


class TestFitBins(unittest.TestCase):
    def test_many_values(self):
        column = np.arange(1, 1001, dtype=np.float64).reshape(-1, 1)
        bin_map = fit_bins(column, 255)
        self.assertEqual(bin_map.n_bins(0), 255)
        counts = np.bincount(bin_map.transform(column)[:, 0])
        self.assertLessEqual(counts.max() - counts.min(), 2)

    def test_constant_feature(self):
        bin_map = fit_bins(np.full((10, 1), 3.0), 255)
        self.assertEqual(bin_map.n_bins(0), 1)
        self.assertEqual(len(bin_map.thresholds[0]), 0)

    def test_few_values(self):
        column = np.asarray([[1.0], [2.0], [3.0], [2.0]])
        bin_map = fit_bins(column, 255)
        self.assertEqual(bin_map.n_bins(0), 3)
        self.assertEqual(bin_map.transform(column)[:, 0].tolist(), [0, 1, 2, 1])

    def test_threshold_goes_left(self):
        bin_map = BinMap([np.asarray([5.0])])
        self.assertEqual(bin_map.transform(np.asarray([[5.0], [5.5]]))[:, 0].tolist(), [0, 1])

    def test_empty(self):
        with self.assertRaises(InsufficientDataError):
            fit_bins(np.empty((0, 3)))


class TestTrain(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.data = toy_set()
        cls.model = train(cls.data, GbdtParams())

    def test_accuracy(self):
        predictions = predict_batch(self.model, self.data.features) > 0.5
        self.assertGreaterEqual(np.mean(predictions == (self.data.labels == 1)), 0.99)

    def test_loss_non_increasing(self):
        losses = self.model.training_loss
        self.assertEqual(len(losses), 101)
        for before, after in zip(losses, losses[1:]):
            self.assertLessEqual(after, before + 1e-12)

    def test_monotone_in_recency(self):
        recent = np.full(N_FEATURES, 500.0)
        recent[0] = 10
        stale = recent.copy()
        stale[0] = 1e6
        self.assertGreater(predict(self.model, recent), 0.5)
        self.assertGreater(predict(self.model, recent), predict(self.model, stale))

    def test_batch_equals_single(self):
        """Batched scores equal one-row scores bit for bit."""
        rows = toy_set(1_024, seed=9).features
        for size in (1, 7, 128, 1_024):
            batch = predict_batch(self.model, rows[:size])
            single = np.asarray([predict(self.model, row) for row in rows[:size]])
            self.assertEqual(len(batch), size)
            self.assertTrue(np.array_equal(batch, single))

    def test_probabilities_open_interval(self):
        rows = np.vstack([self.data.features[:100], np.full((1, N_FEATURES), 1e12)])
        probabilities = predict_batch(self.model, rows)
        self.assertTrue(np.all((probabilities > 0) & (probabilities < 1)))

    def test_deterministic_serialization(self):
        again = train(self.data, GbdtParams())
        self.assertEqual(again.to_json(), self.model.to_json())

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "model.json")
            save_model(self.model, path)
            loaded = load_model(path)
        rows = self.data.features[:50]
        np.testing.assert_array_equal(predict_batch(loaded, rows), predict_batch(self.model, rows))


class TestDegenerateModels(unittest.TestCase):
    def test_single_class(self):
        data = TrainingSet(np.random.default_rng(1).random((50, N_FEATURES)), np.zeros(50))
        model = train(data)
        self.assertEqual(model.trees, [])
        self.assertTrue(np.all(predict_batch(model, data.features) < 0.5))

    def test_base_score_only(self):
        model = GbdtModel(BinMap([np.empty(0)] * N_FEATURES), [], 0.0)
        self.assertEqual(predict(model, np.zeros(N_FEATURES)), 0.5)

    def test_feature_vector_input(self):
        model = GbdtModel(BinMap([np.empty(0)] * N_FEATURES), [], 0.0)
        vector = FeatureVector((SENTINEL,) * 32, 0.0, 10.0)
        self.assertEqual(predict_batch(model, [vector]).tolist(), [0.5])

    def test_empty_set(self):
        with self.assertRaises(InsufficientDataError):
            TrainingSet(np.empty((0, N_FEATURES)), np.empty(0))

    def test_invalid_params(self):
        with self.assertRaises(ConfigError):
            train(toy_set(100), GbdtParams(max_bins=1))

    def test_bad_json(self):
        with self.assertRaises(ModelFormatError):
            GbdtModel.from_json("{\"version\": 99}")
        with self.assertRaises(ModelFormatError):
            GbdtModel.from_json("not json")


if __name__ == '__main__':
    unittest.main()
