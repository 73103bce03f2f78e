"""From-scratch random-forest classifier with per-node cover bookkeeping.

Covers (bootstrap training-sample counts per node) are retained on every
node because the SHAP attribution path weights condition on them. Per-tree
RNG streams are derived from master_seed XOR tree_index, so fits are
reproducible regardless of how tree growth is scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DataError, UsageError

FOREST_FORMAT = "vesselrisk-forest-v1"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    max_depth: int = 16          # 0 means unlimited
    min_samples_leaf: int = 5
    mtry: int | None = None      # None -> ceil(sqrt(n_features))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1 or self.max_depth < 0:
            raise UsageError(f"invalid forest config: {self}")
        if self.mtry is not None and self.mtry < 1:
            raise UsageError(f"mtry must be >= 1, got {self.mtry}")


@dataclass
class Tree:
    feature: np.ndarray     # int64, -1 at leaves
    threshold: np.ndarray   # float64
    left: np.ndarray        # int64
    right: np.ndarray       # int64
    value: np.ndarray       # [n_nodes, n_classes] class distribution
    cover: np.ndarray       # float64 training cover
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def expected_value(self) -> np.ndarray:
        return _kernels.tree_expected_value(self.feature, self.left, self.right,
                                            self.value, self.cover)


class RandomForestModel:
    def __init__(self, trees: list[Tree], n_classes: int, n_features: int, config: ForestConfig):
        self.trees = trees
        self.n_classes = n_classes
        self.n_features = n_features
        self.config = config

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite values in prediction input")
        X = np.ascontiguousarray(X)
        proba = np.zeros((X.shape[0], self.n_classes))
        for t in self.trees:
            leaves = _kernels.apply_tree(t.feature, t.threshold, t.left, t.right, X)
            proba += t.value[leaves]
        proba /= len(self.trees)
        return proba[0] if single else proba

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Argmax class; ties resolve to the lowest class index (np.argmax rule)."""
        proba = self.predict_proba(X)
        if proba.ndim == 1:
            return int(np.argmax(proba))
        return np.argmax(proba, axis=1)

    # -- serialization ---------------------------------------------------------

    def _node_dict(self, t: Tree, i: int) -> dict:
        if t.feature[i] < 0:
            return {"dist": [float(v) for v in t.value[i]], "cover": float(t.cover[i])}
        return {
            "feature": int(t.feature[i]),
            "threshold": float(t.threshold[i]),
            "cover": float(t.cover[i]),
            "dist": [float(v) for v in t.value[i]],
            "left": self._node_dict(t, int(t.left[i])),
            "right": self._node_dict(t, int(t.right[i])),
        }

    def to_json(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "config": asdict(self.config),
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "trees": [self._node_dict(t, 0) for t in self.trees],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def from_json(cls, doc: dict) -> "RandomForestModel":
        if doc.get("format") != FOREST_FORMAT:
            raise DataError(f"unsupported forest document format {doc.get('format')!r}")
        config = ForestConfig(**doc["config"])
        n_classes = doc["n_classes"]
        trees = []
        for root in doc["trees"]:
            nodes: list[dict] = []

            def collect(nd):
                i = len(nodes)
                nodes.append(nd)
                if "feature" in nd:
                    nd["_left"] = collect(nd["left"])
                    nd["_right"] = collect(nd["right"])
                return i

            collect(root)
            n = len(nodes)
            feature = np.full(n, -1, dtype=np.int64)
            threshold = np.zeros(n)
            left = np.full(n, -1, dtype=np.int64)
            right = np.full(n, -1, dtype=np.int64)
            value = np.zeros((n, n_classes))
            cover = np.zeros(n)
            depth = 0
            for i, nd in enumerate(nodes):
                cover[i] = nd["cover"]
                value[i] = nd["dist"]
                if "feature" in nd:
                    feature[i] = nd["feature"]
                    threshold[i] = nd["threshold"]
                    left[i] = nd["_left"]
                    right[i] = nd["_right"]
            # recompute depth from structure
            def depth_of(i, d):
                nonlocal depth
                depth = max(depth, d)
                if feature[i] >= 0:
                    depth_of(left[i], d + 1)
                    depth_of(right[i], d + 1)
            depth_of(0, 0)
            trees.append(Tree(feature, threshold, left, right, value, cover, depth))
        return cls(trees, n_classes, doc["n_features"], config)

    @classmethod
    def load(cls, path: str | Path) -> "RandomForestModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def gini_impurity(class_counts) -> float:
    """1 - sum((c_i / N)^2) over non-negative class counts."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise UsageError("class counts must be non-negative")
    total = counts.sum()
    if total == 0:
        raise UsageError("class counts must not all be zero")
    p = counts / total
    return float(1.0 - np.dot(p, p))


def fit(X: np.ndarray, y: np.ndarray, config: ForestConfig, n_classes: int | None = None
        ) -> RandomForestModel:
    """Grow the ensemble on (X, y); y holds class indices 0..n_classes-1."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise DataError("X must be 2-D with one label per row")
    if X.shape[0] == 0:
        raise DataError("empty training set")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite values in training matrix")
    present = np.unique(y)
    if n_classes is None:
        n_classes = int(present.max()) + 1
    if len(present) < 2:
        raise DataError("training set must contain at least two classes")
    m = X.shape[1]
    mtry = config.mtry if config.mtry is not None else int(math.ceil(math.sqrt(m)))
    mtry = min(mtry, m)
    trees = []
    master = np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF)
    for t in range(config.n_trees):
        tree_seed = master ^ np.uint64(t)
        arrs = _kernels.build_tree(X, y, n_classes, config.max_depth,
                                   config.min_samples_leaf, mtry,
                                   config.bootstrap, tree_seed)
        trees.append(Tree(*arrs))
    return RandomForestModel(trees, n_classes, m, config)
