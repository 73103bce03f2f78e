"""Candidate-factor catalog, per-sample factor evaluation and risk labeling.

A sample is one vessel observed at one datestamp: factor values are pulled
from the preceding five years of history (365-day blocks anchored at the
datestamp) and the label is graded from the severity of incidents in the
following year.

Non-profile measures produce an annual series M_1..M_5 (past 1st..5th year)
and are enumerated in three formats:
  annual(k)   = M_k                       k in 1..5
  cumul(n)    = sum_{i<=n} M_i            n in 1..5
  decayed(n)  = sum_{i<=n} k_i * M_i      n in 2..5, decay weights {5,4,3,3,2}
Average daily sailing distance is a ratio measure: its cumulative/decayed
formats divide (weighted) distance sums by (weighted) sailing-day sums over
the same span rather than summing annual ratios.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import CoverageError, DataError, UsageError
from .events import PROFILE_FIELDS, EventStore, day_of

YEAR_DAYS = 365

DEFAULT_DECAY = (5.0, 4.0, 3.0, 3.0, 2.0)
DEFAULT_SEVERITY = (6.0, 2.0, 1.0)
DEFAULT_T_HIGH = 3.0

LABELS = ("Low", "Medium", "High")

_ORDINALS = {1: "first", 2: "second", 3: "third", 4: "fourth", 5: "fifth"}
_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five"}


@dataclass(frozen=True)
class DecaySchedule:
    weights: tuple[float, ...] = DEFAULT_DECAY

    def __post_init__(self):
        if len(self.weights) != 5 or any(w <= 0 for w in self.weights):
            raise UsageError(f"decay schedule needs 5 positive weights, got {self.weights}")


@dataclass(frozen=True)
class SeverityWeights:
    w_a: float = DEFAULT_SEVERITY[0]
    w_b: float = DEFAULT_SEVERITY[1]
    w_c: float = DEFAULT_SEVERITY[2]

    def __post_init__(self):
        if not (self.w_a >= self.w_b >= self.w_c > 0):
            raise UsageError(f"severity weights must satisfy w_a >= w_b >= w_c > 0, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_a, self.w_b, self.w_c])


@dataclass(frozen=True)
class LabelThresholds:
    """Risk bands over next-year severity: {0} -> Low, (0, t_high) -> Medium, [t_high, inf) -> High."""
    t_high: float = DEFAULT_T_HIGH

    def __post_init__(self):
        if self.t_high <= 0:
            raise UsageError(f"t_high must be positive, got {self.t_high}")


CATEGORIES = (
    "Incidents", "PSCDeficiencies", "Detentions", "Sailing",
    "DOCPerformance", "FlagPerformance", "Profile",
)

# measure id -> (primary category, plain description noun, decayed description noun)
MEASURES = {
    "incidents_a": ("Incidents", "Number of Category A incidents", "number of Category A incidents"),
    "incidents_b": ("Incidents", "Number of Category B incidents", "number of Category B incidents"),
    "incidents_c": ("Incidents", "Number of Category C incidents", "number of Category C incidents"),
    "incident_severity": ("Incidents", "Sum of severity across all the incidents",
                          "sum of severity across all the incidents"),
    "deficiency_count": ("PSCDeficiencies", "Number of PSC deficiencies", "sum of PSC deficiencies"),
    "detention_count": ("Detentions", "Number of detentions", "number of detentions"),
    "sailing_distance": ("Sailing", "Cumulative sailing distance", "sailing distance"),
    "sailing_days": ("Sailing", "Number of sailing days", "number of sailing days"),
    "avg_daily_distance": ("Sailing", "Average sailing distance", "average sailing distance"),
    "doc_total_severity": ("DOCPerformance",
                           "Sum of incident severity over the vessels that belong to the DOC company",
                           "sum of incident severity over the vessels that belong to the DOC company"),
    "doc_total_deficiencies": ("DOCPerformance",
                               "Number of deficiencies over the vessels that belong to the DOC company",
                               "number of deficiencies over the vessels that belong to the DOC company"),
    "doc_total_detentions": ("DOCPerformance",
                             "Number of detentions over the vessels that belong to the DOC company",
                             "number of detentions over the vessels that belong to the DOC company"),
    "doc_avg_severity": ("DOCPerformance",
                         "Average incident severity over the vessels that belong to the DOC company",
                         "average incident severity over the vessels that belong to the DOC company"),
    "doc_avg_deficiencies": ("DOCPerformance",
                             "Average deficiencies over the vessels that belong to the DOC company",
                             "average deficiencies over the vessels that belong to the DOC company"),
    "doc_avg_detentions": ("DOCPerformance",
                           "Average detentions over the vessels that belong to the DOC company",
                           "average detentions over the vessels that belong to the DOC company"),
    "flag_red_flags": ("FlagPerformance", "Number of red flags", "number of red flags"),
}

# DOC measures are scoped by secondary category for correlation filtering
_DOC_SECONDARY = {
    "doc_total_severity": "DOC-incidents",
    "doc_avg_severity": "DOC-incidents",
    "doc_total_deficiencies": "DOC-deficiencies",
    "doc_avg_deficiencies": "DOC-deficiencies",
    "doc_total_detentions": "DOC-detentions",
    "doc_avg_detentions": "DOC-detentions",
}

_PROFILE_DESCRIPTIONS = {
    "dwt": "Dead weight tonnage",
    "max_dwt": "Maximum dead weight tonnage",
    "depth": "Depth",
    "draught": "Draught",
    "gross_tonnage": "Gross tonnage",
    "length_bp": "Length between perpendiculars",
    "length_oa": "Length overall",
    "net_tonnage": "Net tonnage",
}


@dataclass(frozen=True)
class FactorDescriptor:
    id: str
    primary_category: str
    measure: str                 # measure id or profile field name
    format: str | None           # "annual" | "cumulative" | "decayed" | None for profile
    span: int | None             # past-year index (annual) or year count (cumulative/decayed)

    @property
    def scope_group(self) -> str:
        """Correlation-scoping group: primary category, DOC split by secondary."""
        if self.primary_category == "DOCPerformance":
            return _DOC_SECONDARY[self.measure]
        return self.primary_category

    def description(self) -> str:
        if self.primary_category == "Profile":
            return _PROFILE_DESCRIPTIONS[self.measure]
        plain, decayed = MEASURES[self.measure][1], MEASURES[self.measure][2]
        if self.format == "annual":
            tail = "in the past year" if self.span == 1 else f"in the past {_ORDINALS[self.span]} year"
            return f"{plain} {tail}"
        if self.format == "cumulative":
            tail = "in the past year" if self.span == 1 else f"in the past {_WORDS[self.span]} years"
            return f"{plain} {tail}"
        return f"Decayed {decayed} in the past {_WORDS[self.span]} years"


@dataclass
class FactorCatalog:
    factors: list[FactorDescriptor]
    decay: DecaySchedule = field(default_factory=DecaySchedule)
    severity: SeverityWeights = field(default_factory=SeverityWeights)
    thresholds: LabelThresholds = field(default_factory=LabelThresholds)

    def __post_init__(self):
        ids = [f.id for f in self.factors]
        if len(set(ids)) != len(ids):
            raise UsageError("duplicate factor ids in catalog")
        keys = [(f.primary_category, f.measure, f.format, f.span) for f in self.factors]
        if len(set(keys)) != len(keys):
            raise UsageError("duplicate factor descriptors in catalog")
        self._by_id = {f.id: f for f in self.factors}

    def __len__(self) -> int:
        return len(self.factors)

    def ids(self) -> list[str]:
        return [f.id for f in self.factors]

    def get(self, factor_id: str) -> FactorDescriptor:
        return self._by_id[factor_id]

    def index_of(self, factor_id: str) -> int:
        return self.ids().index(factor_id)

    def to_config(self) -> dict:
        return {
            "decay_weights": list(self.decay.weights),
            "severity_weights": [self.severity.w_a, self.severity.w_b, self.severity.w_c],
            "t_high": self.thresholds.t_high,
            "factors": [
                {"id": f.id, "category": f.primary_category, "measure": f.measure,
                 "format": f.format, "span": f.span}
                for f in self.factors
            ],
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "FactorCatalog":
        decay = DecaySchedule(tuple(cfg.get("decay_weights", DEFAULT_DECAY)))
        sw = cfg.get("severity_weights", DEFAULT_SEVERITY)
        severity = SeverityWeights(*sw)
        thresholds = LabelThresholds(cfg.get("t_high", DEFAULT_T_HIGH))
        if "factors" in cfg:
            factors = [
                FactorDescriptor(f["id"], f["category"], f["measure"], f["format"], f["span"])
                for f in cfg["factors"]
            ]
            return cls(factors, decay, severity, thresholds)
        return build_catalog(decay, severity, thresholds)


def build_catalog(
    decay: DecaySchedule | None = None,
    severity: SeverityWeights | None = None,
    thresholds: LabelThresholds | None = None,
) -> FactorCatalog:
    """Enumerate the default candidate pool: every non-profile measure in
    annual(1..5), cumulative(1..5) and decayed(2..5) formats, plus the eight
    profile fields."""
    factors: list[FactorDescriptor] = []
    for measure, (cat, _, _) in MEASURES.items():
        for k in range(1, 6):
            factors.append(FactorDescriptor(f"{measure}__annual_{k}", cat, measure, "annual", k))
        for n in range(1, 6):
            factors.append(FactorDescriptor(f"{measure}__cumul_{n}", cat, measure, "cumulative", n))
        for n in range(2, 6):
            factors.append(FactorDescriptor(f"{measure}__decayed_{n}", cat, measure, "decayed", n))
    for pf in PROFILE_FIELDS:
        factors.append(FactorDescriptor(f"profile__{pf}", "Profile", pf, None, None))
    return FactorCatalog(
        factors,
        decay or DecaySchedule(),
        severity or SeverityWeights(),
        thresholds or LabelThresholds(),
    )


# -- elementary operations ----------------------------------------------------


def decayed_cumulative(annual_values, schedule: DecaySchedule, n: int) -> float:
    """Recency-weighted sum over the past n years: sum_i k_i * M_i."""
    if not (1 <= n <= 5):
        raise UsageError(f"n must be in 1..5, got {n}")
    vals = np.asarray(annual_values, dtype=float)[:n]
    if len(vals) < n:
        raise UsageError(f"need {n} annual values, got {len(vals)}")
    if not np.all(np.isfinite(vals)):
        raise UsageError("annual values must be finite")
    return float(np.dot(np.asarray(schedule.weights[:n]), vals))


def severity_sum(count_a: float, count_b: float, count_c: float,
                 weights: SeverityWeights | None = None) -> float:
    w = weights or SeverityWeights()
    return w.w_a * count_a + w.w_b * count_b + w.w_c * count_c


def grade_label(next_year_severity: float, thresholds: LabelThresholds | None = None) -> str:
    t = (thresholds or LabelThresholds()).t_high
    if next_year_severity < 0:
        raise UsageError(f"severity must be non-negative, got {next_year_severity}")
    if next_year_severity == 0:
        return "Low"
    if next_year_severity < t:
        return "Medium"
    return "High"


def fleet_size(store: EventStore, doc_id: str, start_day: int, end_day: int) -> float:
    """Duration-weighted mean instantaneous fleet size of a DOC over [start, end)."""
    if end_day <= start_day:
        raise UsageError("fleet_size window must be non-empty")
    total = 0
    for m in store.members_of("DOC", doc_id):
        a = max(start_day, day_of(m.start))
        b = min(end_day, day_of(m.end))
        if b > a:
            total += b - a
    return total / (end_day - start_day)


def entity_weighted_metric(store: EventStore, vessel_id: str, start_day: int, end_day: int,
                           entity_kind: str, metric_fn) -> float:
    """Duration-weighted aggregate of metric_fn(entity_id, seg_start, seg_end)
    over the vessel's membership segments covering [start, end).

    The window must be fully covered; a gap raises CoverageError naming the
    uncovered sub-window.
    """
    if end_day <= start_day:
        raise UsageError("window must be non-empty")
    segments = []
    for m in store.memberships_of(vessel_id, entity_kind):
        a = max(start_day, day_of(m.start))
        b = min(end_day, day_of(m.end))
        if b > a:
            segments.append((a, b, m.entity_id))
    segments.sort()
    cursor = start_day
    for a, b, _ in segments:
        if a > cursor:
            raise CoverageError(
                f"vessel {vessel_id!r} has no {entity_kind} membership over "
                f"[{cursor}, {a}) (days since epoch)"
            )
        cursor = max(cursor, b)
    if cursor < end_day:
        raise CoverageError(
            f"vessel {vessel_id!r} has no {entity_kind} membership over "
            f"[{cursor}, {end_day}) (days since epoch)"
        )
    window_len = end_day - start_day
    return sum((b - a) / window_len * metric_fn(eid, a, b) for a, b, eid in segments)


def sailing_factors(store: EventStore, vessel_id: str, start_day: int, end_day: int
                    ) -> tuple[float, float, float]:
    """(cumulative distance, sailing days, average daily distance) over a window.

    Sailing days count only days with non-zero recorded distance; zero
    sailing days yields an average of 0.
    """
    distances = store.sailing_in(vessel_id, start_day, end_day)
    cumulative = float(distances.sum())
    days = int(np.count_nonzero(distances))
    avg = cumulative / days if days > 0 else 0.0
    return cumulative, float(days), avg


# -- per-sample evaluation -----------------------------------------------------


class FactorEvaluator:
    """Evaluates every catalog factor for (vessel, datestamp) pairs.

    DOC fleet aggregates are memoized per (doc, segment) since most vessels
    in a fleet share the same year windows.
    """

    def __init__(self, store: EventStore, catalog: FactorCatalog):
        self.store = store
        self.catalog = catalog
        self._doc_cache: dict[tuple, float] = {}

    # fleet totals over a segment, events attributed while membership covers them
    def _doc_total(self, doc_id: str, a: int, b: int, what: str) -> float:
        key = (doc_id, a, b, what)
        hit = self._doc_cache.get(key)
        if hit is not None:
            return hit
        store = self.store
        total = 0.0
        for m in store.members_of("DOC", doc_id):
            lo = max(a, day_of(m.start))
            hi = min(b, day_of(m.end))
            if hi <= lo:
                continue
            if what == "severity":
                cats = store.incident_categories_in(m.vessel_id, lo, hi)
                if len(cats):
                    total += float(self.catalog.severity.as_array()[cats].sum())
            elif what == "deficiencies":
                total += float(store.deficiency_counts_in(m.vessel_id, lo, hi).sum())
            else:
                total += float(store.detention_count_in(m.vessel_id, lo, hi))
        self._doc_cache[key] = total
        return total

    def _doc_metric(self, what: str, average: bool):
        def fn(doc_id: str, a: int, b: int) -> float:
            total = self._doc_total(doc_id, a, b, what)
            if not average:
                return total
            size = fleet_size(self.store, doc_id, a, b)
            return total / size if size > 0 else 0.0
        return fn

    def _flag_metric(self, flag_id: str, a: int, b: int) -> float:
        """Day-weighted annual red flags of one flag over [a, b)."""
        store = self.store
        total = 0.0
        y = date.fromordinal(a).year
        while True:
            y_start = day_of(date(y, 1, 1))
            y_end = day_of(date(y + 1, 1, 1))
            lo, hi = max(a, y_start), min(b, y_end)
            if lo < hi:
                total += (hi - lo) * store.red_flags_of(flag_id, y)
            if y_end >= b:
                break
            y += 1
        return total / (b - a)

    def annual_series(self, vessel_id: str, stamp_day: int) -> dict[str, np.ndarray]:
        """M_1..M_5 for every non-profile measure (index 0 = past 1st year).

        Coverage gaps in DOC/flag membership yield NaN for the affected
        years; the sample is then dropped downstream.
        """
        store = self.store
        sev_w = self.catalog.severity.as_array()
        series = {m: np.zeros(5) for m in MEASURES}
        for k in range(1, 6):
            a = stamp_day - k * YEAR_DAYS
            b = stamp_day - (k - 1) * YEAR_DAYS
            i = k - 1
            cats = store.incident_categories_in(vessel_id, a, b)
            counts = np.bincount(cats, minlength=3) if len(cats) else np.zeros(3, dtype=int)
            series["incidents_a"][i] = counts[0]
            series["incidents_b"][i] = counts[1]
            series["incidents_c"][i] = counts[2]
            series["incident_severity"][i] = float(sev_w @ counts)
            series["deficiency_count"][i] = float(store.deficiency_counts_in(vessel_id, a, b).sum())
            series["detention_count"][i] = float(store.detention_count_in(vessel_id, a, b))
            dist, days, avg = sailing_factors(store, vessel_id, a, b)
            series["sailing_distance"][i] = dist
            series["sailing_days"][i] = days
            series["avg_daily_distance"][i] = avg
            try:
                series["doc_total_severity"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("severity", False))
                series["doc_total_deficiencies"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("deficiencies", False))
                series["doc_total_detentions"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("detentions", False))
                series["doc_avg_severity"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("severity", True))
                series["doc_avg_deficiencies"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("deficiencies", True))
                series["doc_avg_detentions"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "DOC", self._doc_metric("detentions", True))
            except CoverageError:
                for m in ("doc_total_severity", "doc_total_deficiencies", "doc_total_detentions",
                          "doc_avg_severity", "doc_avg_deficiencies", "doc_avg_detentions"):
                    series[m][i] = np.nan
            try:
                series["flag_red_flags"][i] = entity_weighted_metric(
                    store, vessel_id, a, b, "Flag", self._flag_metric)
            except CoverageError:
                series["flag_red_flags"][i] = np.nan
        return series

    def factor_value(self, desc: FactorDescriptor, series: dict[str, np.ndarray],
                     profile_values: tuple[float, ...]) -> float:
        if desc.primary_category == "Profile":
            return profile_values[PROFILE_FIELDS.index(desc.measure)]
        decay = np.asarray(self.catalog.decay.weights)
        if desc.measure == "avg_daily_distance":
            dist = series["sailing_distance"]
            days = series["sailing_days"]
            if desc.format == "annual":
                d, n = dist[desc.span - 1], days[desc.span - 1]
            elif desc.format == "cumulative":
                d, n = dist[:desc.span].sum(), days[:desc.span].sum()
            else:
                w = decay[:desc.span]
                d, n = float(w @ dist[:desc.span]), float(w @ days[:desc.span])
            return float(d / n) if n > 0 else 0.0
        m = series[desc.measure]
        if desc.format == "annual":
            return float(m[desc.span - 1])
        if desc.format == "cumulative":
            return float(m[:desc.span].sum())
        return float(decay[:desc.span] @ m[:desc.span])

    def evaluate(self, vessel_id: str, stamp_day: int) -> np.ndarray:
        """Factor vector in catalog order; may contain NaN for coverage gaps."""
        series = self.annual_series(vessel_id, stamp_day)
        profile = self.store.profiles[vessel_id].values()
        return np.array([self.factor_value(f, series, profile) for f in self.catalog.factors])

    def label(self, vessel_id: str, stamp_day: int, label_span_years: int = 1) -> tuple[str, float]:
        cats = self.store.incident_categories_in(
            vessel_id, stamp_day, stamp_day + label_span_years * YEAR_DAYS)
        counts = np.bincount(cats, minlength=3) if len(cats) else np.zeros(3, dtype=int)
        sev = float(self.catalog.severity.as_array() @ counts)
        return grade_label(sev, self.catalog.thresholds), sev


# -- dataset ---------------------------------------------------------------------


@dataclass
class LabeledDataset:
    """Sample matrix aligned with a catalog, labels encoded 0=Low 1=Medium 2=High."""
    X: np.ndarray                    # [n_samples, n_factors] float64
    y: np.ndarray                    # [n_samples] int64
    catalog: FactorCatalog
    vessel_ids: list[str] | None = None
    datestamps: list[date] | None = None
    synthetic: np.ndarray | None = None  # bool mask, set by the resampler
    dropped_samples: int = 0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y shapes disagree")
        if self.X.shape[1] != len(self.catalog):
            raise DataError(
                f"factor matrix has {self.X.shape[1]} columns but catalog has {len(self.catalog)}")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.y, minlength=3)
        return {LABELS[i]: int(counts[i]) for i in range(3)}

    def subset_columns(self, factor_ids: list[str]) -> np.ndarray:
        idx = [self.catalog.index_of(fid) for fid in factor_ids]
        return self.X[:, idx]

    def drop_zero_variance(self) -> tuple["LabeledDataset", list[str]]:
        """Remove constant factor columns (they carry no signal and Pearson is
        undefined on them). Returns the reduced dataset and the removed ids."""
        keep = [i for i in range(self.X.shape[1]) if np.ptp(self.X[:, i]) > 0]
        removed = [self.catalog.factors[i].id for i in range(self.X.shape[1]) if i not in set(keep)]
        cat = FactorCatalog([self.catalog.factors[i] for i in keep],
                            self.catalog.decay, self.catalog.severity, self.catalog.thresholds)
        return LabeledDataset(self.X[:, keep], self.y.copy(), cat,
                              self.vessel_ids, self.datestamps, self.synthetic,
                              self.dropped_samples), removed

    def to_csv(self, path, include_synthetic: bool = False) -> None:
        import pandas as pd
        frame = pd.DataFrame(self.X, columns=self.catalog.ids())
        frame["label"] = [LABELS[c] for c in self.y]
        if include_synthetic:
            syn = self.synthetic if self.synthetic is not None else np.zeros(self.n_samples, bool)
            frame["synthetic"] = syn
        frame.to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, catalog: FactorCatalog) -> "LabeledDataset":
        import pandas as pd
        frame = pd.read_csv(path)
        synthetic = None
        if "synthetic" in frame.columns:
            synthetic = frame.pop("synthetic").to_numpy(bool)
        labels = frame.pop("label")
        if list(frame.columns) != catalog.ids():
            raise DataError("dataset columns do not match catalog factor ids")
        y = np.array([LABELS.index(l) for l in labels], dtype=np.int64)
        return cls(frame.to_numpy(np.float64), y, catalog, synthetic=synthetic)


def assemble_dataset(
    store: EventStore,
    catalog: FactorCatalog,
    datestamps: list[date],
    factor_span_years: int = 5,
    label_span_years: int = 1,
) -> LabeledDataset:
    """One sample per (vessel, datestamp); samples with non-finite factor
    values (e.g. membership coverage gaps) are dropped and counted."""
    stamps = sorted(set(datestamps))
    if store.span is not None:
        lo, hi = store.span
        for d in stamps:
            sd = day_of(d)
            if sd - factor_span_years * YEAR_DAYS < lo or sd + label_span_years * YEAR_DAYS > hi:
                raise DataError(
                    f"datestamp {d} needs coverage "
                    f"[{sd - factor_span_years * YEAR_DAYS}, {sd + label_span_years * YEAR_DAYS}) "
                    f"but store spans [{lo}, {hi})")
    evaluator = FactorEvaluator(store, catalog)
    rows, labels, vids, stamps_out = [], [], [], []
    dropped = 0
    for vid in store.vessel_ids:
        for d in stamps:
            sd = day_of(d)
            values = evaluator.evaluate(vid, sd)
            if not np.all(np.isfinite(values)):
                dropped += 1
                continue
            label, _ = evaluator.label(vid, sd, label_span_years)
            rows.append(values)
            labels.append(LABELS.index(label))
            vids.append(vid)
            stamps_out.append(d)
    X = np.vstack(rows) if rows else np.empty((0, len(catalog)))
    y = np.asarray(labels, dtype=np.int64)
    return LabeledDataset(X, y, catalog, vids, stamps_out, dropped_samples=dropped)
