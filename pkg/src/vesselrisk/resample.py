"""SMOTE oversampling with Tomek-link cleaning for the imbalanced label.

Distances are computed on z-score-standardized factors (raw scales differ
by orders of magnitude between tonnage and event counts). Every synthetic
sample is a convex combination of two same-class originals; each synthetic
draw uses an RNG stream derived from (seed, draw index) so output does not
depend on worker scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.neighbors import NearestNeighbors

from .errors import DataError, UsageError
from .factors import LABELS, LabeledDataset

# paper-regime class ratio used when no explicit targets are given
DEFAULT_CLASS_RATIO = {"Low": 6.6, "Medium": 3.5, "High": 1.0}


@dataclass(frozen=True)
class ResampleConfig:
    k_neighbors: int = 5
    target_counts: dict | None = None   # label name or class index -> count
    undersample_majority: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise UsageError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.target_counts is not None:
            for k, v in self.target_counts.items():
                if v <= 0:
                    raise UsageError(f"target count for {k!r} must be positive, got {v}")


@dataclass
class ResampledDataset:
    dataset: LabeledDataset                       # originals first, synthetics after
    originals: LabeledDataset                     # post-undersample, pre-SMOTE originals
    provenance: dict[int, tuple[int, int]]        # synthetic row in dataset -> parent rows in originals
    removed_by_tomek: int
    class_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.class_counts:
            self.class_counts = self.dataset.class_counts()


def _standardize(X: np.ndarray) -> np.ndarray:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd


def _normalize_targets(target_counts: dict) -> dict[int, int]:
    out = {}
    for k, v in target_counts.items():
        c = LABELS.index(k) if isinstance(k, str) else int(k)
        out[c] = int(v)
    return out


def smote(dataset: LabeledDataset, class_index: int, n_synthetic: int,
          k: int, seed: int) -> tuple[np.ndarray, dict[int, tuple[int, int]]]:
    """Generate n_synthetic interpolated samples for one class.

    Each synthetic x = x_i + u * (x_nn - x_i) with u ~ U[0, 1], x_nn among
    x_i's k nearest same-class neighbors (Euclidean on standardized
    factors). Returns (synthetic rows, draw -> (parent, neighbor) map with
    indices into the full dataset).
    """
    members = np.flatnonzero(dataset.y == class_index)
    if len(members) < 2:
        raise DataError(f"class {class_index} has {len(members)} sample(s); SMOTE needs >= 2")
    if k > len(members) - 1:
        warnings.warn(f"k={k} exceeds class size - 1; clamped to {len(members) - 1}",
                      stacklevel=2)
        k = len(members) - 1
    if n_synthetic == 0:
        return np.empty((0, dataset.X.shape[1])), {}

    Z = _standardize(dataset.X)
    nn = NearestNeighbors(n_neighbors=k + 1).fit(Z[members])
    neigh = nn.kneighbors(Z[members], return_distance=False)[:, 1:]  # drop self

    rows = np.empty((n_synthetic, dataset.X.shape[1]))
    provenance: dict[int, tuple[int, int]] = {}
    for i in range(n_synthetic):
        rng = np.random.default_rng((seed, i))
        p = int(rng.integers(len(members)))
        q = int(neigh[p, rng.integers(k)])
        u = rng.random()
        a, b = int(members[p]), int(members[q])
        rows[i] = dataset.X[a] + u * (dataset.X[b] - dataset.X[a])
        provenance[i] = (a, b)
    return rows, provenance


def tomek_links(X: np.ndarray, y: np.ndarray) -> list[tuple[int, int]]:
    """Unordered cross-class mutual-1-NN pairs (Euclidean, standardized)."""
    if len(X) < 2:
        raise UsageError("need at least 2 samples")
    Z = _standardize(np.asarray(X, dtype=float))
    nn = NearestNeighbors(n_neighbors=2).fit(Z)
    nearest = nn.kneighbors(Z, return_distance=False)[:, 1]
    links = []
    for a in range(len(X)):
        b = int(nearest[a])
        if a < b and int(nearest[b]) == a and y[a] != y[b]:
            links.append((a, b))
    return links


def smote_tomek(dataset: LabeledDataset, config: ResampleConfig) -> ResampledDataset:
    """Undersample-above-target (optional) -> SMOTE minorities to target ->
    remove the majority-class member of every remaining Tomek link."""
    counts = np.bincount(dataset.y, minlength=3)
    if (counts > 0).sum() < 2:
        raise DataError("resampling needs at least 2 classes present")

    if config.target_counts is not None:
        targets = _normalize_targets(config.target_counts)
    else:
        total = dataset.n_samples
        ratio = np.array([DEFAULT_CLASS_RATIO[LABELS[c]] for c in range(3)])
        targets = {c: max(1, int(round(total * ratio[c] / ratio.sum())))
                   for c in range(3) if counts[c] > 0}
    for c, t in targets.items():
        if counts[c] == 0 and t > 0:
            raise DataError(f"target {t} for class {c} but no samples of that class exist")
        if counts[c] == 1 and t > counts[c]:
            raise DataError(f"class {c} has a single sample; cannot synthesize to target {t}")

    rng = np.random.default_rng(config.seed)
    keep = np.ones(dataset.n_samples, dtype=bool)
    if config.undersample_majority:
        for c, t in sorted(targets.items()):
            members = np.flatnonzero(dataset.y == c)
            if len(members) > t:
                drop = rng.choice(members, size=len(members) - t, replace=False)
                keep[drop] = False
    kept_idx = np.flatnonzero(keep)
    base = LabeledDataset(dataset.X[kept_idx], dataset.y[kept_idx], dataset.catalog)

    X_parts = [base.X]
    y_parts = [base.y]
    provenance: dict[int, tuple[int, int]] = {}
    next_row = base.n_samples
    base_counts = np.bincount(base.y, minlength=3)
    for c, t in sorted(targets.items()):
        need = t - int(base_counts[c])
        if need <= 0:
            continue
        rows, prov = smote(base, c, need, config.k_neighbors, config.seed + c + 1)
        X_parts.append(rows)
        y_parts.append(np.full(need, c, dtype=np.int64))
        for i, (a, b) in prov.items():
            provenance[next_row + i] = (a, b)
        next_row += need

    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    synthetic = np.zeros(len(y), dtype=bool)
    synthetic[base.n_samples:] = True

    # one cleaning pass: remove the majority-class member of each link
    majority = int(np.argmax(np.bincount(y, minlength=3)))
    links = tomek_links(X, y)
    remove = set()
    for a, b in links:
        if y[a] == majority:
            remove.add(a)
        elif y[b] == majority:
            remove.add(b)
    retained = np.array([i for i in range(len(y)) if i not in remove], dtype=np.int64)
    remap = {old: new for new, old in enumerate(retained)}
    # parent indices stay in `base` coordinates so betweenness remains
    # checkable even when a parent itself was cleaned away
    out_prov = {remap[row]: parents for row, parents in provenance.items() if row in remap}

    out = LabeledDataset(X[retained], y[retained], dataset.catalog,
                         synthetic=synthetic[retained])
    return ResampledDataset(out, base, out_prov, removed_by_tomek=len(remove))
