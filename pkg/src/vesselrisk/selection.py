"""Cross-validated evaluation, filter-parameter grid search and top-n selection.

Multiclass metrics use the one-against-all scheme with support-weighted
averaging; AUC is the rank-statistic (Mann-Whitney) formulation with tie
adjustment. The selection criterion everywhere is weighted F1, with ties
broken by AUC, then smaller window, smaller threshold, smaller n.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import forest as forest_mod
from .errors import DataError, UsageError
from .factors import LabeledDataset
from .filtering import CorrelationMatrix, FilterConfig, FilterResult, sliding_filter
from .forest import ForestConfig
from .shap_values import ImportanceRank


@dataclass(frozen=True)
class CVConfig:
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise UsageError(f"cross-validation needs k >= 2, got {self.k}")


@dataclass(frozen=True)
class GridSpec:
    tau_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
    window_values: tuple[int, ...] = (5, 10, 15, 20, 25)

    def __post_init__(self):
        if not self.tau_values or not self.window_values:
            raise UsageError("grid must be non-empty")
        if list(self.tau_values) != sorted(self.tau_values) or \
           list(self.window_values) != sorted(self.window_values):
            raise UsageError("grid values must be sorted ascending")

    def cells(self) -> list[tuple[float, int]]:
        return [(t, w) for t in self.tau_values for w in self.window_values]


@dataclass
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    per_class: dict[int, dict[str, float]] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)

    AGGREGATES = ("accuracy", "precision", "recall", "f1", "auc")

    def __post_init__(self):
        for name in self.AGGREGATES:
            v = getattr(self, name)
            if not (-1e-9 <= v <= 1 + 1e-9):
                raise DataError(f"{name}={v} outside [0, 1]")

    def criterion(self) -> tuple[float, float]:
        return (self.f1, self.auc)

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.AGGREGATES}
        out["per_class"] = {str(c): dict(v) for c, v in self.per_class.items()}
        if self.stds:
            out["stds"] = dict(self.stds)
        return out


def _better(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Strictly better by (weighted F1, AUC)."""
    return a > b


def stratified_kfold(y: np.ndarray, k: int = 5, seed: int = 0) -> np.ndarray:
    """Fold assignment 0..k-1 per sample; per-fold class counts within +-1
    of an even split of each class."""
    if k < 2:
        raise UsageError(f"k must be >= 2, got {k}")
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    folds = np.full(len(y), -1, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < k:
            raise DataError(f"class {c} has only {len(idx)} samples, fewer than k={k}")
        idx = rng.permutation(idx)
        for pos, i in enumerate(idx):
            folds[i] = (pos + offset) % k
        offset += len(idx) % k  # rotate the short fold across classes
    return folds


def _auc_rank(y_binary: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney AUC with average-rank tie adjustment."""
    n_pos = int(y_binary.sum())
    n_neg = len(y_binary) - n_pos
    ranks = rankdata(scores)
    r_pos = ranks[y_binary.astype(bool)].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(y_true: np.ndarray, y_pred: np.ndarray, y_proba: np.ndarray) -> MetricSet:
    """Accuracy plus support-weighted OAA precision/recall/F1/AUC.

    Classes absent from y_true have no defined AUC: they are excluded from
    the weighted AUC mean with a warning.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    y_proba = np.asarray(y_proba, dtype=np.float64)
    if len(y_true) != len(y_pred) or y_proba.shape[0] != len(y_true):
        raise UsageError("inputs must be aligned")
    if not np.allclose(y_proba.sum(axis=1), 1.0, atol=1e-6):
        raise UsageError("probability rows must sum to 1")
    n_classes = y_proba.shape[1]
    accuracy = float((y_true == y_pred).mean())

    per_class: dict[int, dict[str, float]] = {}
    supports = np.zeros(n_classes)
    for c in range(n_classes):
        pos = y_true == c
        pred_pos = y_pred == c
        support = int(pos.sum())
        supports[c] = support
        tp = int((pos & pred_pos).sum())
        fp = int((~pos & pred_pos).sum())
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        if support == 0 or support == len(y_true):
            auc = float("nan")
            warnings.warn(
                f"class {c} absent from one side of y_true; AUC undefined and excluded",
                stacklevel=2)
        else:
            auc = _auc_rank(pos.astype(np.int64), y_proba[:, c])
        per_class[c] = {"precision": precision, "recall": recall, "f1": f1,
                        "auc": auc, "support": support}

    total = supports.sum()
    weighted = {}
    for name in ("precision", "recall", "f1"):
        weighted[name] = float(sum(per_class[c][name] * supports[c] for c in range(n_classes)) / total)
    auc_weights = np.array([supports[c] if np.isfinite(per_class[c]["auc"]) else 0.0
                            for c in range(n_classes)])
    if auc_weights.sum() > 0:
        weighted["auc"] = float(sum(per_class[c]["auc"] * auc_weights[c]
                                    for c in range(n_classes) if auc_weights[c] > 0) / auc_weights.sum())
    else:
        weighted["auc"] = 0.0
    return MetricSet(accuracy, weighted["precision"], weighted["recall"],
                     weighted["f1"], weighted["auc"], per_class)


def aggregate_folds(fold_metrics: list[MetricSet]) -> MetricSet:
    """Fold-mean MetricSet with per-metric standard deviations."""
    means = {name: float(np.mean([getattr(m, name) for m in fold_metrics]))
             for name in MetricSet.AGGREGATES}
    stds = {name: float(np.std([getattr(m, name) for m in fold_metrics]))
            for name in MetricSet.AGGREGATES}
    per_class: dict[int, dict[str, float]] = {}
    for c in fold_metrics[0].per_class:
        per_class[c] = {}
        for key in ("precision", "recall", "f1", "auc", "support"):
            vals = [m.per_class[c][key] for m in fold_metrics if np.isfinite(m.per_class[c][key])]
            per_class[c][key] = float(np.mean(vals)) if vals else float("nan")
    return MetricSet(means["accuracy"], means["precision"], means["recall"],
                     means["f1"], means["auc"], per_class, stds)


def _fit_eval(X_train, y_train, X_val, y_val, forest_config: ForestConfig,
              n_classes: int) -> MetricSet:
    model = forest_mod.fit(X_train, y_train, forest_config, n_classes=n_classes)
    proba = model.predict_proba(X_val)
    pred = np.argmax(proba, axis=1)
    return compute_metrics(y_val, pred, proba)


def evaluate_cv(dataset: LabeledDataset, factor_ids: list[str],
                forest_config: ForestConfig, cv: CVConfig) -> MetricSet:
    """k-fold CV restricted to the given factor columns; fold-mean metrics.

    Columns are canonicalized to catalog order so the result does not
    depend on subset ordering.
    """
    if not factor_ids:
        raise UsageError("factor subset must be non-empty")
    ordered = sorted(factor_ids, key=dataset.catalog.index_of)
    X = dataset.subset_columns(ordered)
    y = dataset.y
    n_classes = len(dataset.class_counts())
    folds = stratified_kfold(y, cv.k, cv.seed)
    fold_metrics = []
    for f in range(cv.k):
        val = folds == f
        cfg = dataclasses.replace(forest_config, seed=forest_config.seed + f)
        fold_metrics.append(_fit_eval(X[~val], y[~val], X[val], y[val], cfg, n_classes))
    return aggregate_folds(fold_metrics)


@dataclass
class TopNResult:
    n: int
    factor_ids: list[str]
    metrics: MetricSet
    trace: list[tuple[int, MetricSet]]


def top_n_selection(dataset: LabeledDataset, rank: ImportanceRank,
                    forest_config: ForestConfig, cv: CVConfig,
                    max_n: int | None = None) -> TopNResult:
    """Evaluate the first n ranked factors for n = 1..len(rank); argmax by
    (weighted F1, AUC), ties to the smallest n."""
    if len(rank) == 0:
        raise UsageError("empty rank")
    limit = len(rank) if max_n is None else min(max_n, len(rank))
    trace = []
    best = None
    for n in range(1, limit + 1):
        ms = evaluate_cv(dataset, rank.factor_ids[:n], forest_config, cv)
        trace.append((n, ms))
        if best is None or _better(ms.criterion(), best[1].criterion()):
            best = (n, ms)
    n, ms = best
    return TopNResult(n, rank.factor_ids[:n], ms, trace)


def conventional_baseline(dataset: LabeledDataset, initial_rank: ImportanceRank,
                          forest_config: ForestConfig, cv: CVConfig,
                          max_n: int | None = None) -> TopNResult:
    """The conventional embedded method: top-n over the unfiltered rank."""
    return top_n_selection(dataset, initial_rank, forest_config, cv, max_n)


@dataclass
class GridCell:
    tau: float
    window: int
    filtered_len: int
    best_n: int
    metrics: MetricSet


@dataclass
class GridSearchResult:
    best_config: FilterConfig
    best_cell: GridCell
    trace: dict[tuple[float, int], GridCell]


def grid_search(dataset: LabeledDataset, initial_rank: ImportanceRank,
                corr: CorrelationMatrix, grid: GridSpec,
                forest_config: ForestConfig, cv: CVConfig,
                scope: str = "WithinCategory", use_absolute: bool = True,
                max_n: int | None = None) -> GridSearchResult:
    """Exhaustive search over (tau, window): filter, then the top-n loop.

    Ties between cells break toward higher AUC, then smaller window, then
    smaller threshold (grid cells are visited in that preference order).
    """
    trace: dict[tuple[float, int], GridCell] = {}
    best_key = None
    best_cell = None
    for w in grid.window_values:
        for tau in grid.tau_values:
            cfg = FilterConfig(r_tau=tau, window=w, scope=scope, use_absolute=use_absolute)
            filtered = sliding_filter(initial_rank, corr, cfg)
            top = top_n_selection(dataset, filtered.rank, forest_config, cv, max_n)
            cell = GridCell(tau, w, len(filtered.rank), top.n, top.metrics)
            trace[(tau, w)] = cell
            if best_key is None or _better(top.metrics.criterion(), best_key):
                best_key = top.metrics.criterion()
                best_cell = cell
    best_config = FilterConfig(r_tau=best_cell.tau, window=best_cell.window,
                               scope=scope, use_absolute=use_absolute)
    return GridSearchResult(best_config, best_cell, trace)
