"""Vessel event-history ingestion and windowed queries.

One CSV file per record kind (UTF-8, header row, ISO dates). The loaded
store is immutable and indexed by vessel so factor extraction can pull
half-open date windows cheaply. All windows everywhere in the package are
half-open: [start, end) -- the start day counts, the end day does not.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InvariantError, ParseError

INCIDENT_CATEGORIES = ("A", "B", "C")
ENTITY_KINDS = ("DOC", "Flag")

PROFILE_FIELDS = (
    "dwt", "max_dwt", "depth", "draught",
    "gross_tonnage", "length_bp", "length_oa", "net_tonnage",
)

CSV_SCHEMAS = {
    "incidents": ("vessel_id", "date", "category"),
    "deficiencies": ("vessel_id", "date", "count"),
    "detentions": ("vessel_id", "date"),
    "sailing": ("vessel_id", "date", "distance"),
    "membership": ("vessel_id", "kind", "entity_id", "start", "end"),
    "flag_demerits": ("flag_id", "year", "red_flags"),
    "profiles": ("vessel_id",) + PROFILE_FIELDS,
}


@dataclass(frozen=True)
class IncidentRecord:
    vessel_id: str
    date: date
    category: str


@dataclass(frozen=True)
class DeficiencyRecord:
    vessel_id: str
    inspection_date: date
    deficiency_count: int


@dataclass(frozen=True)
class DetentionRecord:
    vessel_id: str
    date: date


@dataclass(frozen=True)
class SailingDay:
    vessel_id: str
    date: date
    distance: float


@dataclass(frozen=True)
class MembershipInterval:
    vessel_id: str
    entity_kind: str  # "DOC" | "Flag"
    entity_id: str
    start: date  # inclusive
    end: date    # exclusive


@dataclass(frozen=True)
class FlagDemeritRecord:
    flag_id: str
    year: int
    red_flags: int


@dataclass(frozen=True)
class VesselProfile:
    vessel_id: str
    dwt: float
    max_dwt: float
    depth: float
    draught: float
    gross_tonnage: float
    length_bp: float
    length_oa: float
    net_tonnage: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in PROFILE_FIELDS)


def day_of(d: date) -> int:
    """Date -> integer day ordinal used for all window arithmetic."""
    return d.toordinal()


def date_of(day: int) -> date:
    return date.fromordinal(int(day))


@dataclass
class _VesselEvents:
    """Per-vessel, date-sorted column arrays for one record kind."""
    days: np.ndarray                 # int64, sorted ascending
    payload: np.ndarray | None = None  # per-kind extra column

    def window(self, start_day: int, end_day: int) -> slice:
        lo = int(np.searchsorted(self.days, start_day, side="left"))
        hi = int(np.searchsorted(self.days, end_day, side="left"))
        return slice(lo, hi)


def find_overlap(intervals: list[tuple[int, int]]) -> tuple[int, int] | None:
    """Return indices of the first overlapping pair among [start, end) intervals.

    Brute force on purpose: this doubles as the test oracle for load-time
    overlap rejection.
    """
    for i in range(len(intervals)):
        for j in range(i + 1, len(intervals)):
            a, b = intervals[i], intervals[j]
            if a[0] < b[1] and b[0] < a[1]:
                return (i, j)
    return None


class EventStore:
    """Immutable, vessel-indexed view over all loaded record collections."""

    def __init__(
        self,
        incidents: list[IncidentRecord],
        deficiencies: list[DeficiencyRecord],
        detentions: list[DetentionRecord],
        sailing: list[SailingDay],
        memberships: list[MembershipInterval],
        flag_demerits: list[FlagDemeritRecord],
        profiles: list[VesselProfile],
    ):
        self._records = {
            "incidents": list(incidents),
            "deficiencies": list(deficiencies),
            "detentions": list(detentions),
            "sailing": list(sailing),
            "membership": list(memberships),
            "flag_demerits": list(flag_demerits),
            "profiles": list(profiles),
        }
        # Vessels whose profile has a non-finite or non-positive field are
        # rejected wholesale (profile + all their records), not fatal.
        self.profiles: dict[str, VesselProfile] = {}
        self.rejected_vessels: list[str] = []
        for p in profiles:
            if p.vessel_id in self.profiles or p.vessel_id in self.rejected_vessels:
                raise InvariantError(f"duplicate profile for vessel {p.vessel_id!r}")
            if any(not np.isfinite(v) or v <= 0 for v in p.values()):
                self.rejected_vessels.append(p.vessel_id)
            else:
                self.profiles[p.vessel_id] = p
        if self.rejected_vessels:
            bad = set(self.rejected_vessels)
            self._records["profiles"] = [p for p in profiles if p.vessel_id not in bad]
            for kind in ("incidents", "deficiencies", "detentions", "sailing", "membership"):
                self._records[kind] = [r for r in self._records[kind] if r.vessel_id not in bad]
            incidents = self._records["incidents"]
            deficiencies = self._records["deficiencies"]
            detentions = self._records["detentions"]
            sailing = self._records["sailing"]
            memberships = self._records["membership"]

        self._validate_references()
        self._validate_records()

        # membership indexes
        self.memberships: dict[tuple[str, str], list[MembershipInterval]] = {}
        for m in memberships:
            if m.entity_kind not in ENTITY_KINDS:
                raise InvariantError(f"unknown entity kind {m.entity_kind!r}")
            if m.start >= m.end:
                raise InvariantError(
                    f"membership interval for vessel {m.vessel_id!r} has start >= end ({m.start} >= {m.end})"
                )
            self.memberships.setdefault((m.vessel_id, m.entity_kind), []).append(m)
        for (vid, kind), ivs in self.memberships.items():
            ivs.sort(key=lambda m: m.start)
            spans = [(day_of(m.start), day_of(m.end)) for m in ivs]
            clash = find_overlap(spans)
            if clash is not None:
                a, b = ivs[clash[0]], ivs[clash[1]]
                raise InvariantError(
                    f"overlapping {kind} membership intervals for vessel {vid!r}: "
                    f"[{a.start}, {a.end}) and [{b.start}, {b.end})"
                )

        # entity -> member vessels (used for DOC fleet aggregates)
        self.entity_members: dict[tuple[str, str], list[MembershipInterval]] = {}
        for m in memberships:
            self.entity_members.setdefault((m.entity_kind, m.entity_id), []).append(m)

        self.flag_demerits: dict[tuple[str, int], int] = {}
        for r in flag_demerits:
            if r.red_flags < 0:
                raise InvariantError(f"negative red_flags for flag {r.flag_id!r} year {r.year}")
            self.flag_demerits[(r.flag_id, r.year)] = r.red_flags

        # per-vessel sorted column arrays
        self._by_vessel: dict[str, dict[str, _VesselEvents]] = {}
        self._index_kind("incidents", incidents, lambda r: r.date,
                         lambda r: INCIDENT_CATEGORIES.index(r.category), np.int64)
        self._index_kind("deficiencies", deficiencies, lambda r: r.inspection_date,
                         lambda r: r.deficiency_count, np.int64)
        self._index_kind("detentions", detentions, lambda r: r.date, None, None)
        self._index_kind("sailing", sailing, lambda r: r.date, lambda r: r.distance, np.float64)

        all_days = [day_of(d) for d in self._iter_dates()]
        self.span: tuple[int, int] | None = (min(all_days), max(all_days) + 1) if all_days else None

    # -- construction helpers ------------------------------------------------

    def _iter_dates(self):
        for r in self._records["incidents"]:
            yield r.date
        for r in self._records["deficiencies"]:
            yield r.inspection_date
        for r in self._records["detentions"]:
            yield r.date
        for r in self._records["sailing"]:
            yield r.date
        for m in self._records["membership"]:
            yield m.start
            # last covered day of the half-open interval
            yield m.end - timedelta(days=1)

    def _validate_references(self):
        referenced = set()
        for r in self._records["incidents"]:
            referenced.add(r.vessel_id)
        for r in self._records["deficiencies"]:
            referenced.add(r.vessel_id)
        for r in self._records["detentions"]:
            referenced.add(r.vessel_id)
        for r in self._records["sailing"]:
            referenced.add(r.vessel_id)
        for m in self._records["membership"]:
            referenced.add(m.vessel_id)
        missing = referenced - set(self.profiles)
        if missing:
            raise InvariantError(
                f"{len(missing)} vessel(s) referenced by records have no profile, e.g. {sorted(missing)[:3]}"
            )

    def _validate_records(self):
        for r in self._records["incidents"]:
            if r.category not in INCIDENT_CATEGORIES:
                raise InvariantError(f"incident category {r.category!r} for vessel {r.vessel_id!r} not in {INCIDENT_CATEGORIES}")
        for r in self._records["deficiencies"]:
            if r.deficiency_count < 0:
                raise InvariantError(f"negative deficiency count for vessel {r.vessel_id!r} on {r.inspection_date}")
        seen_sailing = set()
        for r in self._records["sailing"]:
            if r.distance < 0 or not np.isfinite(r.distance):
                raise InvariantError(f"invalid sailing distance {r.distance} for vessel {r.vessel_id!r} on {r.date}")
            key = (r.vessel_id, r.date)
            if key in seen_sailing:
                raise InvariantError(f"duplicate sailing day for vessel {r.vessel_id!r} on {r.date}")
            seen_sailing.add(key)

    def _index_kind(self, kind, records, date_fn, payload_fn, payload_dtype):
        groups: dict[str, list] = {}
        for r in records:
            groups.setdefault(r.vessel_id, []).append(r)
        for vid, rs in groups.items():
            rs.sort(key=date_fn)
            days = np.array([day_of(date_fn(r)) for r in rs], dtype=np.int64)
            payload = None
            if payload_fn is not None:
                payload = np.array([payload_fn(r) for r in rs], dtype=payload_dtype)
            self._by_vessel.setdefault(vid, {})[kind] = _VesselEvents(days, payload)

    # -- queries ---------------------------------------------------------------

    @property
    def vessel_ids(self) -> list[str]:
        return sorted(self.profiles)

    def counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in self._records.items()}

    def records(self, kind: str) -> list:
        return list(self._records[kind])

    def _events(self, vessel_id: str, kind: str) -> _VesselEvents | None:
        if vessel_id not in self.profiles:
            raise KeyError(f"unknown vessel {vessel_id!r}")
        return self._by_vessel.get(vessel_id, {}).get(kind)

    def query_window(self, vessel_id: str, kind: str, start: date, end: date) -> list:
        """Records of `kind` for one vessel with date in [start, end), date order."""
        if kind not in ("incidents", "deficiencies", "detentions", "sailing"):
            raise KeyError(f"unknown record kind {kind!r}")
        if vessel_id not in self.profiles:
            raise KeyError(f"unknown vessel {vessel_id!r}")
        a, b = day_of(start), day_of(end)
        ev = self._events(vessel_id, kind)
        if ev is None:
            return []
        sl = ev.window(a, b)
        out = []
        for i in range(sl.start, sl.stop):
            d = date_of(ev.days[i])
            if kind == "incidents":
                out.append(IncidentRecord(vessel_id, d, INCIDENT_CATEGORIES[int(ev.payload[i])]))
            elif kind == "deficiencies":
                out.append(DeficiencyRecord(vessel_id, d, int(ev.payload[i])))
            elif kind == "detentions":
                out.append(DetentionRecord(vessel_id, d))
            else:
                out.append(SailingDay(vessel_id, d, float(ev.payload[i])))
        return out

    def incident_categories_in(self, vessel_id: str, start_day: int, end_day: int) -> np.ndarray:
        """Category indices (0=A,1=B,2=C) of a vessel's incidents in [start, end)."""
        ev = self._events(vessel_id, "incidents")
        if ev is None:
            return np.empty(0, dtype=np.int64)
        return ev.payload[ev.window(start_day, end_day)]

    def deficiency_counts_in(self, vessel_id: str, start_day: int, end_day: int) -> np.ndarray:
        ev = self._events(vessel_id, "deficiencies")
        if ev is None:
            return np.empty(0, dtype=np.int64)
        return ev.payload[ev.window(start_day, end_day)]

    def detention_count_in(self, vessel_id: str, start_day: int, end_day: int) -> int:
        ev = self._events(vessel_id, "detentions")
        if ev is None:
            return 0
        sl = ev.window(start_day, end_day)
        return sl.stop - sl.start

    def sailing_in(self, vessel_id: str, start_day: int, end_day: int) -> np.ndarray:
        """Daily distances (absent days excluded; they count as distance 0)."""
        ev = self._events(vessel_id, "sailing")
        if ev is None:
            return np.empty(0, dtype=np.float64)
        return ev.payload[ev.window(start_day, end_day)]

    def memberships_of(self, vessel_id: str, entity_kind: str) -> list[MembershipInterval]:
        return self.memberships.get((vessel_id, entity_kind), [])

    def members_of(self, entity_kind: str, entity_id: str) -> list[MembershipInterval]:
        return self.entity_members.get((entity_kind, entity_id), [])

    def red_flags_of(self, flag_id: str, year: int) -> int:
        # unknown (flag, year) pairs count as zero demerits
        return self.flag_demerits.get((flag_id, year), 0)

    # -- serialization -----------------------------------------------------------

    def to_frames(self) -> dict[str, pd.DataFrame]:
        """Re-serialize the store into the CSV schemas (round-trip support)."""
        recs = self._records
        return {
            "incidents": pd.DataFrame(
                [(r.vessel_id, r.date.isoformat(), r.category) for r in recs["incidents"]],
                columns=CSV_SCHEMAS["incidents"]),
            "deficiencies": pd.DataFrame(
                [(r.vessel_id, r.inspection_date.isoformat(), r.deficiency_count) for r in recs["deficiencies"]],
                columns=CSV_SCHEMAS["deficiencies"]),
            "detentions": pd.DataFrame(
                [(r.vessel_id, r.date.isoformat()) for r in recs["detentions"]],
                columns=CSV_SCHEMAS["detentions"]),
            "sailing": pd.DataFrame(
                [(r.vessel_id, r.date.isoformat(), r.distance) for r in recs["sailing"]],
                columns=CSV_SCHEMAS["sailing"]),
            "membership": pd.DataFrame(
                [(m.vessel_id, m.entity_kind, m.entity_id, m.start.isoformat(), m.end.isoformat())
                 for m in recs["membership"]],
                columns=CSV_SCHEMAS["membership"]),
            "flag_demerits": pd.DataFrame(
                [(r.flag_id, r.year, r.red_flags) for r in recs["flag_demerits"]],
                columns=CSV_SCHEMAS["flag_demerits"]),
            "profiles": pd.DataFrame(
                [(p.vessel_id,) + p.values() for p in recs["profiles"]],
                columns=CSV_SCHEMAS["profiles"]),
        }

    def save_csvs(self, out_dir: str | Path) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        for kind, frame in self.to_frames().items():
            p = out_dir / f"{kind}.csv"
            frame.to_csv(p, index=False)
            paths[kind] = p
        return paths


def _parse_date(raw, path, row, col) -> date:
    try:
        return date.fromisoformat(str(raw))
    except (TypeError, ValueError):
        raise ParseError(f"{path}: row {row}, column {col!r}: bad date {raw!r} (expected YYYY-MM-DD)")


def _parse_num(raw, path, row, col, cast):
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: row {row}, column {col!r}: bad value {raw!r}")


def _read_csv(path: str | Path, kind: str) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise ParseError(f"{path}: unreadable CSV ({exc})")
    expected = CSV_SCHEMAS[kind]
    if list(frame.columns) != list(expected):
        raise ParseError(f"{path}: header {list(frame.columns)} does not match schema {list(expected)}")
    return frame


def load_store(paths: dict[str, str | Path]) -> EventStore:
    """Load and validate all record kinds from one CSV path per kind.

    `paths` maps each kind in CSV_SCHEMAS to a file. Parse errors name the
    file, row and column; invariant violations reject the whole load.
    """
    missing = set(CSV_SCHEMAS) - set(paths)
    if missing:
        raise ParseError(f"missing input paths for kinds: {sorted(missing)}")

    incidents = []
    f = _read_csv(paths["incidents"], "incidents")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        incidents.append(IncidentRecord(r.vessel_id, _parse_date(r.date, paths["incidents"], i, "date"), r.category))

    deficiencies = []
    f = _read_csv(paths["deficiencies"], "deficiencies")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        deficiencies.append(DeficiencyRecord(
            r.vessel_id,
            _parse_date(r.date, paths["deficiencies"], i, "date"),
            _parse_num(r.count, paths["deficiencies"], i, "count", int)))

    detentions = []
    f = _read_csv(paths["detentions"], "detentions")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        detentions.append(DetentionRecord(r.vessel_id, _parse_date(r.date, paths["detentions"], i, "date")))

    sailing = []
    f = _read_csv(paths["sailing"], "sailing")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        sailing.append(SailingDay(
            r.vessel_id,
            _parse_date(r.date, paths["sailing"], i, "date"),
            _parse_num(r.distance, paths["sailing"], i, "distance", float)))

    memberships = []
    f = _read_csv(paths["membership"], "membership")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        memberships.append(MembershipInterval(
            r.vessel_id, r.kind, r.entity_id,
            _parse_date(r.start, paths["membership"], i, "start"),
            _parse_date(r.end, paths["membership"], i, "end")))

    flag_demerits = []
    f = _read_csv(paths["flag_demerits"], "flag_demerits")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        flag_demerits.append(FlagDemeritRecord(
            r.flag_id,
            _parse_num(r.year, paths["flag_demerits"], i, "year", int),
            _parse_num(r.red_flags, paths["flag_demerits"], i, "red_flags", int)))

    profiles = []
    f = _read_csv(paths["profiles"], "profiles")
    for i, r in enumerate(f.itertuples(index=False), start=2):
        vals = [_parse_num(getattr(r, c), paths["profiles"], i, c, float) for c in PROFILE_FIELDS]
        profiles.append(VesselProfile(r.vessel_id, *vals))

    return EventStore(incidents, deficiencies, detentions, sailing,
                      memberships, flag_demerits, profiles)
