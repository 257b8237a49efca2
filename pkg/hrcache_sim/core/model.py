"""
Histogram-based gradient boosted decision trees for binary classification.

Features are binned once per training set. Trees are grown depth-wise on per-bin
gradient and hessian histograms; a child's histogram is the parent's minus its
sibling's, so only the smaller child is ever scanned. Trees are stored as flat
arrays and evaluated for a whole batch at once.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hrcache_sim.core.config import GbdtParams
from hrcache_sim.core.errors import InsufficientDataError, ModelFormatError
from hrcache_sim.core.features import FeatureVector

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
RAW_SCORE_LIMIT = 30.0
PREVALENCE_EPS = 1e-6


def sigmoid(raw: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(raw, -RAW_SCORE_LIMIT, RAW_SCORE_LIMIT)))


def logistic_loss(labels: np.ndarray, raw: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    p = sigmoid(raw)
    losses = -(labels * np.log(p) + (1.0 - labels) * np.log1p(-p))
    if weights is None:
        return float(losses.mean())
    return float((losses * weights).sum() / weights.sum())


@dataclass
class TrainingSet:
    """Feature rows with 0/1 labels and optional row weights."""

    features: np.ndarray
    labels: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise InsufficientDataError("features must be a 2-D matrix with one row per label")
        if len(self.labels) == 0:
            raise InsufficientDataError("training set is empty")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], labels: Sequence[int]) -> "TrainingSet":
        if not vectors:
            raise InsufficientDataError("training set is empty")
        return cls(np.vstack([v.to_array() for v in vectors]), np.asarray(labels))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


class BinMap:
    """Per-feature ascending thresholds. A value equal to a threshold falls in the lower bin."""

    def __init__(self, thresholds: List[np.ndarray]):
        self.thresholds = [np.asarray(t, dtype=np.float64) for t in thresholds]

    @property
    def n_features(self) -> int:
        return len(self.thresholds)

    def n_bins(self, feature: int) -> int:
        return len(self.thresholds[feature]) + 1

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        binned = np.empty(features.shape, dtype=np.uint8)
        for j, thresholds in enumerate(self.thresholds):
            binned[:, j] = np.searchsorted(thresholds, features[:, j], side="left")
        return binned

    def to_list(self) -> List[List[float]]:
        return [t.tolist() for t in self.thresholds]


def fit_bins(data: Union[TrainingSet, np.ndarray], max_bins: int = 255) -> BinMap:
    """
    Quantile thresholds over each feature's distinct values.

    Features with at most max_bins distinct values get one bin per value.
    """
    features = data.features if isinstance(data, TrainingSet) else np.asarray(data, dtype=np.float64)
    if len(features) == 0:
        raise InsufficientDataError("fit_bins needs at least one row")
    thresholds = []
    for column in features.T:
        distinct = np.unique(column)
        if len(distinct) <= max_bins:
            thresholds.append(distinct[:-1])
        else:
            quantiles = np.quantile(distinct, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            thresholds.append(np.unique(quantiles))
    return BinMap(thresholds)


@dataclass
class Tree:
    """Flat tree arrays. Leaves have feature == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, binned: np.ndarray) -> np.ndarray:
        """Leaf value reached by every binned row."""
        node = np.zeros(len(binned), dtype=np.int64)
        rows = np.arange(len(binned))
        active = self.feature[node] >= 0
        while active.any():
            f = self.feature[node]
            go_left = binned[rows, np.maximum(f, 0)] <= self.threshold[node]
            step = np.where(go_left, self.left[node], self.right[node])
            node = np.where(active, step, node)
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self) -> Dict[str, list]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, list]) -> "Tree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=np.int64),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=np.float64),
        )


@dataclass
class GbdtModel:
    bin_map: BinMap
    trees: List[Tree]
    base_score: float
    params: GbdtParams = field(default_factory=GbdtParams)
    training_loss: List[float] = field(default_factory=list)

    @property
    def learning_rate(self) -> float:
        return self.params.learning_rate

    def raw_scores(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        raw = np.full(len(features), self.base_score)
        if not self.trees:
            return raw
        binned = self.bin_map.transform(features)
        for tree in self.trees:
            raw += self.learning_rate * tree.apply(binned)
        return raw

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_scores(features))

    def to_json(self) -> str:
        payload = {
            "version": MODEL_FORMAT_VERSION,
            "params": asdict(self.params),
            "base_score": self.base_score,
            "bin_map": self.bin_map.to_list(),
            "trees": [t.to_dict() for t in self.trees],
            "training_loss": self.training_loss,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GbdtModel":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"Model is not valid JSON: {e}") from None
        if not isinstance(payload, dict) or payload.get("version") != MODEL_FORMAT_VERSION:
            raise ModelFormatError(f"Unsupported model format version: {payload.get('version') if isinstance(payload, dict) else None}")
        try:
            return cls(
                bin_map=BinMap(payload["bin_map"]),
                trees=[Tree.from_dict(t) for t in payload["trees"]],
                base_score=float(payload["base_score"]),
                params=GbdtParams(**payload["params"]),
                training_loss=list(payload.get("training_loss", [])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model: {e}") from None


class _TreeBuilder:
    """Depth-wise growth of one regression tree on histogram split gains."""

    def __init__(self, binned: np.ndarray, n_bins: int, params: GbdtParams):
        self.binned = binned
        self.n_bins = n_bins
        self.params = params
        self.n_features = binned.shape[1]
        offsets = np.arange(self.n_features, dtype=np.int64) * n_bins
        self.flat = binned.astype(np.int64) + offsets

    def histograms(self, rows: np.ndarray, grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
        """Stacked (gradient, hessian, count) histograms of shape (3, features, bins)."""
        idx = self.flat[rows].ravel()
        size = self.n_features * self.n_bins
        g = np.bincount(idx, weights=np.repeat(grad[rows], self.n_features), minlength=size)
        h = np.bincount(idx, weights=np.repeat(hess[rows], self.n_features), minlength=size)
        c = np.bincount(idx, minlength=size).astype(np.float64)
        return np.stack([g, h, c]).reshape(3, self.n_features, self.n_bins)

    def best_split(self, hist: np.ndarray) -> Tuple[float, int, int]:
        lam = self.params.l2_leaf_reg
        min_leaf = self.params.min_samples_leaf
        g_tot, h_tot, c_tot = hist[0, 0].sum(), hist[1, 0].sum(), hist[2, 0].sum()
        gl = np.cumsum(hist[0], axis=1)[:, :-1]
        hl = np.cumsum(hist[1], axis=1)[:, :-1]
        cl = np.cumsum(hist[2], axis=1)[:, :-1]
        gr, hr, cr = g_tot - gl, h_tot - hl, c_tot - cl
        parent = g_tot * g_tot / (h_tot + lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
        gain = np.where((cl >= min_leaf) & (cr >= min_leaf), gain, -np.inf)
        gain = np.nan_to_num(gain, nan=-np.inf)
        best = int(np.argmax(gain))
        feature, threshold = divmod(best, self.n_bins - 1)
        return float(gain.flat[best]), feature, threshold

    def grow(self, grad: np.ndarray, hess: np.ndarray) -> Tree:
        lam = self.params.l2_leaf_reg
        feature: List[int] = []
        threshold: List[int] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []

        def new_node(hist: np.ndarray) -> int:
            feature.append(-1)
            threshold.append(0)
            left.append(-1)
            right.append(-1)
            value.append(float(-hist[0, 0].sum() / (hist[1, 0].sum() + lam)))
            return len(feature) - 1

        all_rows = np.arange(len(grad))
        root_hist = self.histograms(all_rows, grad, hess)
        level = [(new_node(root_hist), all_rows, root_hist)]
        depth = 0
        while level and depth < self.params.max_depth:
            next_level = []
            for node, rows, hist in level:
                if len(rows) < 2 * self.params.min_samples_leaf or self.n_bins < 2:
                    continue
                gain, f, b = self.best_split(hist)
                if not gain > 1e-12:
                    continue
                goes_left = self.binned[rows, f] <= b
                rows_left, rows_right = rows[goes_left], rows[~goes_left]
                if len(rows_left) <= len(rows_right):
                    hist_left = self.histograms(rows_left, grad, hess)
                    hist_right = hist - hist_left
                else:
                    hist_right = self.histograms(rows_right, grad, hess)
                    hist_left = hist - hist_right
                feature[node], threshold[node] = f, b
                left[node] = new_node(hist_left)
                right[node] = new_node(hist_right)
                next_level.append((left[node], rows_left, hist_left))
                next_level.append((right[node], rows_right, hist_right))
            level = next_level
            depth += 1

        return Tree(
            feature=np.asarray(feature, dtype=np.int64),
            threshold=np.asarray(threshold, dtype=np.int64),
            left=np.asarray(left, dtype=np.int64),
            right=np.asarray(right, dtype=np.int64),
            value=np.asarray(value, dtype=np.float64),
        )


def train(data: TrainingSet, params: Optional[GbdtParams] = None) -> GbdtModel:
    """
    Boost logistic-loss trees on a training set.

    A single-class set yields a model with only a base score.
    """
    params = params or GbdtParams()
    params.validate()
    weights = data.weights if data.weights is not None else np.ones(len(data))
    labels = data.labels

    prevalence = float((labels * weights).sum() / weights.sum())
    clipped = min(max(prevalence, PREVALENCE_EPS), 1.0 - PREVALENCE_EPS)
    base_score = math.log(clipped / (1.0 - clipped))
    bin_map = fit_bins(data, params.max_bins)
    model = GbdtModel(bin_map, [], base_score, params)

    raw = np.full(len(data), base_score)
    model.training_loss.append(logistic_loss(labels, raw, weights))
    if prevalence in (0.0, 1.0):
        logger.info(f"Training set has a single class ({len(data)} rows), using base score only")
        return model

    binned = bin_map.transform(data.features)
    n_bins = max(bin_map.n_bins(j) for j in range(bin_map.n_features))
    builder = _TreeBuilder(binned, n_bins, params)
    for round_index in range(params.n_trees):
        p = sigmoid(raw)
        grad = (p - labels) * weights
        hess = p * (1.0 - p) * weights
        tree = builder.grow(grad, hess)
        model.trees.append(tree)
        raw += params.learning_rate * tree.apply(binned)
        model.training_loss.append(logistic_loss(labels, raw, weights))
    logger.debug(f"Trained {len(model.trees)} trees on {len(data)} rows, "
                 f"loss {model.training_loss[0]:.4f} -> {model.training_loss[-1]:.4f}")
    return model


def predict_batch(model: GbdtModel, xs: Union[np.ndarray, Sequence[FeatureVector]]) -> np.ndarray:
    if len(xs) == 0:
        return np.empty(0)
    if not isinstance(xs, np.ndarray):
        xs = np.vstack([x.to_array() for x in xs])
    return model.predict_proba(xs)


def predict(model: GbdtModel, x: Union[np.ndarray, FeatureVector]) -> float:
    row = x.to_array() if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    return float(predict_batch(model, row.reshape(1, -1))[0])


def save_model(model: GbdtModel, path: Union[str, Path]) -> None:
    Path(path).write_text(model.to_json(), encoding="utf-8")
    logger.info(f"Saved model with {len(model.trees)} trees to {path}")


def load_model(path: Union[str, Path]) -> GbdtModel:
    return GbdtModel.from_json(Path(path).read_text(encoding="utf-8"))
