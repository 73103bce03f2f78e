"""Event-store validation, indexing, querying and CSV round trips."""

from datetime import date, timedelta

import numpy as np
import pytest

from vesselrisk.errors import InvariantError, ParseError
from vesselrisk.events import (DeficiencyRecord, DetentionRecord, EventStore,
                               FlagDemeritRecord, IncidentRecord, MembershipInterval,
                               SailingDay, VesselProfile, day_of, date_of,
                               find_overlap, load_store)

from conftest import SPAN_END, SPAN_START, basic_store, make_profile


def test_day_ordinal_round_trip():
    d = date(2019, 7, 14)
    assert date_of(day_of(d)) == d
    assert day_of(d + timedelta(days=1)) == day_of(d) + 1


class TestValidation:
    def test_bad_incident_category(self):
        with pytest.raises(InvariantError, match="category"):
            basic_store(incidents=[IncidentRecord("V1", date(2015, 1, 1), "D")])

    def test_negative_deficiency_count(self):
        with pytest.raises(InvariantError, match="negative deficiency"):
            basic_store(deficiencies=[DeficiencyRecord("V1", date(2015, 1, 1), -1)])

    def test_duplicate_sailing_day(self):
        rec = SailingDay("V1", date(2015, 1, 1), 100.0)
        with pytest.raises(InvariantError, match="duplicate sailing day"):
            basic_store(sailing=[rec, SailingDay("V1", date(2015, 1, 1), 50.0)])

    def test_negative_sailing_distance(self):
        with pytest.raises(InvariantError, match="sailing distance"):
            basic_store(sailing=[SailingDay("V1", date(2015, 1, 1), -3.0)])

    def test_overlapping_memberships_rejected(self):
        memberships = [
            MembershipInterval("V1", "DOC", "D1", date(2012, 1, 1), date(2015, 1, 1)),
            MembershipInterval("V1", "DOC", "D2", date(2014, 6, 1), date(2018, 1, 1)),
        ]
        with pytest.raises(InvariantError, match="overlapping DOC membership"):
            basic_store(memberships=memberships, flag_demerits=[])

    def test_adjacent_memberships_allowed(self):
        memberships = [
            MembershipInterval("V1", "DOC", "D1", date(2012, 1, 1), date(2015, 1, 1)),
            MembershipInterval("V1", "DOC", "D2", date(2015, 1, 1), date(2018, 1, 1)),
        ]
        store = basic_store(memberships=memberships, flag_demerits=[])
        assert len(store.memberships_of("V1", "DOC")) == 2

    def test_membership_start_not_before_end(self):
        bad = MembershipInterval("V1", "DOC", "D1", date(2015, 1, 1), date(2015, 1, 1))
        with pytest.raises(InvariantError, match="start >= end"):
            basic_store(memberships=[bad], flag_demerits=[])

    def test_record_without_profile_rejected(self):
        with pytest.raises(InvariantError, match="no profile"):
            basic_store(incidents=[IncidentRecord("GHOST", date(2015, 1, 1), "A")])

    def test_duplicate_profile_rejected(self):
        with pytest.raises(InvariantError, match="duplicate profile"):
            basic_store(profiles=[make_profile("V1"), make_profile("V1")])

    def test_nonpositive_profile_field_drops_vessel(self):
        bad = VesselProfile("V2", dwt=-5.0, max_dwt=1, depth=1, draught=1,
                            gross_tonnage=1, length_bp=1, length_oa=1, net_tonnage=1)
        store = basic_store(
            profiles=[make_profile("V1"), bad],
            incidents=[IncidentRecord("V2", date(2015, 1, 1), "A")],
        )
        assert store.rejected_vessels == ["V2"]
        assert store.vessel_ids == ["V1"]
        assert store.counts()["incidents"] == 0


class TestFindOverlap:
    def test_disjoint(self):
        assert find_overlap([(0, 5), (5, 10), (12, 20)]) is None

    def test_overlap_found(self):
        assert find_overlap([(0, 5), (3, 8)]) == (0, 1)

    def test_randomized_agrees_with_pairwise_definition(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 8))
            ivs = []
            for _ in range(n):
                a = int(rng.integers(0, 50))
                ivs.append((a, a + int(rng.integers(1, 10))))
            expect = None
            for i in range(n):
                for j in range(i + 1, n):
                    lo = max(ivs[i][0], ivs[j][0])
                    hi = min(ivs[i][1], ivs[j][1])
                    if lo < hi:
                        expect = (i, j)
                        break
                if expect:
                    break
            assert find_overlap(ivs) == expect


class TestQueries:
    def test_window_half_open(self):
        store = basic_store(incidents=[
            IncidentRecord("V1", date(2015, 1, 1), "A"),
            IncidentRecord("V1", date(2015, 6, 1), "B"),
            IncidentRecord("V1", date(2016, 1, 1), "C"),
        ])
        got = store.query_window("V1", "incidents", date(2015, 1, 1), date(2016, 1, 1))
        assert [r.category for r in got] == ["A", "B"]  # end date excluded

    def test_window_counts_match_bruteforce(self):
        rng = np.random.default_rng(7)
        days = rng.choice(3000, size=60, replace=False)
        incidents = [IncidentRecord("V1", date(2012, 1, 1) + timedelta(days=int(d)),
                                    "ABC"[int(rng.integers(3))]) for d in days]
        store = basic_store(incidents=incidents)
        for _ in range(50):
            a = date(2012, 1, 1) + timedelta(days=int(rng.integers(0, 3000)))
            b = a + timedelta(days=int(rng.integers(1, 800)))
            expect = [r for r in incidents if a <= r.date < b]
            got = store.query_window("V1", "incidents", a, b)
            assert len(got) == len(expect)
            cats = store.incident_categories_in("V1", day_of(a), day_of(b))
            assert len(cats) == len(expect)

    def test_unknown_vessel_raises(self):
        store = basic_store()
        with pytest.raises(KeyError):
            store.query_window("NOPE", "incidents", date(2015, 1, 1), date(2016, 1, 1))

    def test_members_of_and_red_flags(self):
        store = basic_store(flag_demerits=[FlagDemeritRecord("F1", 2015, 7)])
        assert [m.vessel_id for m in store.members_of("DOC", "D1")] == ["V1"]
        assert store.red_flags_of("F1", 2015) == 7
        assert store.red_flags_of("F1", 1999) == 0  # unknown year defaults to 0

    def test_span_covers_membership_interval(self):
        store = basic_store()
        lo, hi = store.span
        assert lo == day_of(SPAN_START)
        assert hi == day_of(SPAN_END)  # end-1 day observed, +1 for half-open


class TestCsvRoundTrip:
    def test_save_and_load_preserves_everything(self, tmp_path):
        store = basic_store(
            incidents=[IncidentRecord("V1", date(2015, 3, 2), "B")],
            deficiencies=[DeficiencyRecord("V1", date(2014, 7, 1), 4)],
            detentions=[DetentionRecord("V1", date(2016, 2, 2))],
            sailing=[SailingDay("V1", date(2015, 5, 5), 123.5)],
            flag_demerits=[FlagDemeritRecord("F1", 2015, 3)],
        )
        paths = store.save_csvs(tmp_path)
        again = load_store(paths)
        assert again.counts() == store.counts()
        assert again.span == store.span
        for kind, frame in store.to_frames().items():
            assert frame.equals(again.to_frames()[kind])

    def test_parse_error_names_location(self, tmp_path):
        store = basic_store()
        paths = store.save_csvs(tmp_path)
        bad = tmp_path / "incidents.csv"
        bad.write_text("vessel_id,date,category\nV1,not-a-date,A\n")
        with pytest.raises(ParseError) as err:
            load_store(paths)
        msg = str(err.value)
        assert "incidents.csv" in msg and "date" in msg

    def test_missing_column_rejected(self, tmp_path):
        store = basic_store()
        paths = store.save_csvs(tmp_path)
        (tmp_path / "detentions.csv").write_text("vessel_id\nV1\n")
        with pytest.raises(ParseError, match="column"):
            load_store(paths)
