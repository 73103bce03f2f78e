"""Per-sample, per-class SHAP attributions for the forest.

Two independent routes are provided on purpose: the fast path-dependent
computation (`tree_shap` / `shap_matrix`) and an exact subset-enumeration
oracle (`brute_force_shapley`) restricted to small feature counts. Both
marginalize absent features by descending both children weighted by
training cover, so they must agree to numerical precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, UsageError
from .factors import FactorCatalog
from .forest import RandomForestModel

BRUTE_FORCE_MAX_FEATURES = 15


@dataclass
class ShapMatrix:
    """values[sample, factor, class] plus per-class base values."""
    values: np.ndarray       # [n_samples, n_factors, n_classes]
    base_values: np.ndarray  # [n_classes]

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)) or not np.all(np.isfinite(self.base_values)):
            raise DataError("non-finite SHAP values")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.values.shape[2]


@dataclass
class ImportanceRank:
    """Factor ids in descending importance; ties keep catalog order."""
    factor_ids: list[str]
    importance: np.ndarray  # aligned with factor_ids

    def __post_init__(self):
        imp = np.asarray(self.importance, dtype=float)
        if np.any(np.diff(imp) > 1e-12):
            raise DataError("importance values not in descending order")
        self.importance = imp

    def __len__(self) -> int:
        return len(self.factor_ids)


def tree_shap(model: RandomForestModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SHAP attribution of one sample: (phi [n_features, n_classes], base [n_classes]).

    Satisfies local accuracy: base + phi.sum(axis=0) == predict_proba(x).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise DataError(f"expected vector of length {model.n_features}, got shape {x.shape}")
    phi = np.zeros((model.n_features, model.n_classes))
    base = np.zeros(model.n_classes)
    for t in model.trees:
        phi += _kernels.tree_shap(t.feature, t.threshold, t.left, t.right,
                                  t.value, t.cover, x, model.n_features, t.depth)
        base += t.expected_value()
    n = len(model.trees)
    return phi / n, base / n


def shap_matrix(model: RandomForestModel, X: np.ndarray) -> ShapMatrix:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    values = np.zeros((X.shape[0], model.n_features, model.n_classes))
    base = np.zeros(model.n_classes)
    for t in model.trees:
        base += t.expected_value()
        for j in range(X.shape[0]):
            values[j] += _kernels.tree_shap(t.feature, t.threshold, t.left, t.right,
                                            t.value, t.cover, X[j], model.n_features, t.depth)
    n = len(model.trees)
    return ShapMatrix(values / n, base / n)


def _tree_subset_expectations(tree, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Conditional expectations of one tree for every feature subset.

    masks is the [n_subsets] bitmask array; features outside a subset are
    marginalized by cover-weighted descent into both children.
    """
    n_classes = tree.value.shape[1]

    def rec(node: int) -> np.ndarray:
        if tree.feature[node] < 0:
            return np.broadcast_to(tree.value[node], (len(masks), n_classes)).copy()
        f = int(tree.feature[node])
        L = rec(int(tree.left[node]))
        R = rec(int(tree.right[node]))
        blended = (tree.cover[tree.left[node]] * L + tree.cover[tree.right[node]] * R) / tree.cover[node]
        followed = L if x[f] <= tree.threshold[node] else R
        has = ((masks >> f) & 1).astype(bool)
        return np.where(has[:, None], followed, blended)

    return rec(0)


def brute_force_shapley(model: RandomForestModel, x: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Exact Shapley values by direct enumeration of all feature subsets.

    Limited to <= 15 features (2^m subsets). Returns (phi, base) like
    tree_shap; this is the verification oracle for the fast path.
    """
    x = np.asarray(x, dtype=np.float64)
    m = model.n_features
    if m > BRUTE_FORCE_MAX_FEATURES:
        raise UsageError(f"brute force limited to {BRUTE_FORCE_MAX_FEATURES} features, got {m}")
    if x.shape != (m,):
        raise DataError(f"expected vector of length {m}, got shape {x.shape}")
    masks = np.arange(1 << m, dtype=np.int64)
    v = np.zeros((1 << m, model.n_classes))
    for t in model.trees:
        v += _tree_subset_expectations(t, x, masks)
    v /= len(model.trees)

    sizes = np.zeros(1 << m, dtype=np.int64)
    for f in range(m):
        sizes += (masks >> f) & 1
    # weight by |s| for subsets s not containing i
    w_by_size = np.array([math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m)
                          for s in range(m)])
    phi = np.zeros((m, model.n_classes))
    for i in range(m):
        without = masks[((masks >> i) & 1) == 0]
        weights = w_by_size[sizes[without]]
        phi[i] = (weights[:, None] * (v[without | (1 << i)] - v[without])).sum(axis=0)
    return phi, v[0]


def aggregate_importance(matrix: ShapMatrix, catalog: FactorCatalog,
                         scope: str | int = "global") -> ImportanceRank:
    """Mean |phi| over samples (and classes for global scope), ranked descending.

    scope: "global" or a class index for per-class importance. Ties keep
    catalog order (stable sort on negated importance).
    """
    if matrix.n_samples == 0:
        raise DataError("empty SHAP matrix")
    if matrix.n_factors != len(catalog):
        raise DataError("SHAP matrix width does not match catalog")
    if scope == "global":
        imp = np.abs(matrix.values).mean(axis=(0, 2))
    else:
        c = int(scope)
        if not (0 <= c < matrix.n_classes):
            raise UsageError(f"class index {c} out of range")
        imp = np.abs(matrix.values[:, :, c]).mean(axis=0)
    order = np.argsort(-imp, kind="stable")
    ids = catalog.ids()
    return ImportanceRank([ids[i] for i in order], imp[order])


def category_aggregate(factor_ids: list[str], importances: np.ndarray,
                       catalog: FactorCatalog) -> dict[str, float]:
    """Per-primary-category shares of summed importance, normalized to 1."""
    if len(factor_ids) == 0:
        raise UsageError("key-factor subset must be non-empty")
    sums: dict[str, float] = {}
    for fid, imp in zip(factor_ids, importances):
        cat = catalog.get(fid).primary_category
        sums[cat] = sums.get(cat, 0.0) + float(imp)
    total = sum(sums.values())
    if total == 0:
        return {cat: 0.0 for cat in sums}
    return {cat: v / total for cat, v in sums.items()}


def beeswarm_frame(matrix: ShapMatrix, X: np.ndarray, catalog: FactorCatalog):
    """Long-form (factor_id, sample_id, class, shap_value, factor_value) export."""
    import pandas as pd
    ids = catalog.ids()
    rows = []
    for j in range(matrix.n_samples):
        for i, fid in enumerate(ids):
            for c in range(matrix.n_classes):
                rows.append((fid, j, c, matrix.values[j, i, c], X[j, i]))
    return pd.DataFrame(rows, columns=["factor_id", "sample_id", "class", "shap_value", "factor_value"])
