"""Pearson correlation matrices and the sliding-window redundancy filter.

The filter walks an importance rank: in each round the anchor is one rank
position, the window covers the anchor plus the w-1 following positions of
the *current* (already pruned) rank, and every windowed factor whose
correlation with the anchor exceeds the threshold is removed. The anchor
then advances to the next retained position; the procedure stops once the
anchor reaches the last retained factor. It is single-pass by construction
and therefore not idempotent in general; the removal trace makes every
intermediate rank auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError
from .factors import FactorCatalog
from .shap_values import ImportanceRank


def pearson(x, y) -> float:
    """Pearson correlation; 0 when either series is constant (0/0 case)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise UsageError(f"series must be 1-D and equal length, got {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise UsageError("series must have length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0:
        return 0.0
    return float((xc @ yc) / denom)


@dataclass
class CorrelationMatrix:
    factor_ids: list[str]
    matrix: np.ndarray  # [sigma, sigma] symmetric
    scope: str          # "WithinCategory" | "Global"

    def __post_init__(self):
        self._index = {fid: i for i, fid in enumerate(self.factor_ids)}
        if self.matrix.shape != (len(self.factor_ids),) * 2:
            raise DataError("correlation matrix shape does not match factor ids")

    def r(self, a: str, b: str) -> float:
        return float(self.matrix[self._index[a], self._index[b]])

    def to_frame(self):
        import pandas as pd
        return pd.DataFrame(self.matrix, index=self.factor_ids, columns=self.factor_ids)


def correlation_matrix(X: np.ndarray, catalog: FactorCatalog,
                       scope: str = "WithinCategory") -> CorrelationMatrix:
    """Pairwise Pearson over sample values.

    WithinCategory scope records cross-group entries as 0 so they can never
    trigger filtering; DOC factors are grouped at the secondary-category
    level. Constant factors correlate 0 with everything.
    """
    if scope not in ("WithinCategory", "Global"):
        raise UsageError(f"unknown scope {scope!r}")
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise UsageError("need at least 2 samples for correlations")
    if X.shape[1] != len(catalog):
        raise DataError("sample matrix width does not match catalog")
    Xc = X - X.mean(axis=0)
    ss = np.sqrt((Xc * Xc).sum(axis=0))
    nonconst = ss > 0
    denom = np.outer(ss, ss)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (Xc.T @ Xc) / denom
    r[~nonconst, :] = 0.0
    r[:, ~nonconst] = 0.0
    if scope == "WithinCategory":
        groups = np.array([f.scope_group for f in catalog.factors])
        same = groups[:, None] == groups[None, :]
        r = np.where(same, r, 0.0)
    return CorrelationMatrix(catalog.ids(), r, scope)


@dataclass(frozen=True)
class FilterConfig:
    r_tau: float = 0.2
    window: int = 15          # window length, anchor included
    scope: str = "WithinCategory"
    use_absolute: bool = True

    def __post_init__(self):
        if not (0 < self.r_tau <= 1):
            raise UsageError(f"r_tau must be in (0, 1], got {self.r_tau}")
        if self.window < 2:
            raise UsageError(f"window must be >= 2, got {self.window}")
        if self.scope not in ("WithinCategory", "Global"):
            raise UsageError(f"unknown scope {self.scope!r}")


@dataclass
class FilterRound:
    round: int
    anchor: str
    removed: list[tuple[str, float]]  # (factor id, correlation with anchor)


@dataclass
class FilterResult:
    rank: ImportanceRank          # surviving subsequence, original order
    trace: list[FilterRound]

    def removed_ids(self) -> list[str]:
        return [fid for rnd in self.trace for fid, _ in rnd.removed]

    def trace_json(self) -> list[dict]:
        return [
            {"round": r.round, "anchor": r.anchor,
             "removed": [{"id": fid, "r": corr} for fid, corr in r.removed]}
            for r in self.trace
        ]


def sliding_filter(rank: ImportanceRank, corr: CorrelationMatrix,
                   config: FilterConfig) -> FilterResult:
    """Run the sliding-window redundancy filter over an importance rank."""
    if len(rank) == 0:
        raise UsageError("empty importance rank")
    missing = set(rank.factor_ids) - set(corr.factor_ids)
    if missing:
        raise DataError(f"rank factors missing from correlation matrix: {sorted(missing)[:3]}")

    current = list(rank.factor_ids)
    imp = dict(zip(rank.factor_ids, rank.importance))
    trace: list[FilterRound] = []
    pos = 0
    round_no = 0
    while pos < len(current) - 1:
        round_no += 1
        anchor = current[pos]
        removed: list[tuple[str, float]] = []
        window_end = min(pos + config.window, len(current))
        survivors = current[:pos + 1]
        for q in range(pos + 1, len(current)):
            fid = current[q]
            if q < window_end:
                r = corr.r(anchor, fid)
                stat = abs(r) if config.use_absolute else r
                if stat > config.r_tau:
                    removed.append((fid, r))
                    continue
            survivors.append(fid)
        current = survivors
        trace.append(FilterRound(round_no, anchor, removed))
        pos += 1
    surviving = ImportanceRank(current, np.array([imp[f] for f in current]))
    return FilterResult(surviving, trace)


def replay_trace(rank: ImportanceRank, result: FilterResult) -> list[list[str]]:
    """Re-execute the recorded removals; returns every intermediate rank.

    Used as the replay-soundness oracle: the final intermediate rank must
    equal result.rank and each round's removals must sit inside that
    round's window.
    """
    current = list(rank.factor_ids)
    states = []
    for i, rnd in enumerate(result.trace):
        if current[i] != rnd.anchor:
            raise DataError(f"round {rnd.round}: anchor {rnd.anchor!r} not at position {i}")
        gone = {fid for fid, _ in rnd.removed}
        current = [f for f in current if f not in gone]
        states.append(list(current))
    return states
