"""Pearson correlations and the sliding-window redundancy filter."""

import numpy as np
import pytest

from vesselrisk.errors import DataError, UsageError
from vesselrisk.factors import DecaySchedule, FactorCatalog, FactorDescriptor
from vesselrisk.filtering import (CorrelationMatrix, FilterConfig, correlation_matrix,
                                  pearson, replay_trace, sliding_filter)
from vesselrisk.shap_values import ImportanceRank


def flat_catalog(n: int, category: str = "Incidents") -> FactorCatalog:
    factors = [FactorDescriptor(f"f{i:02d}", category, f"m{i}", "annual", 1)
               for i in range(n)]
    return FactorCatalog(factors, DecaySchedule())


def corr_from(ids, matrix, scope="Global") -> CorrelationMatrix:
    return CorrelationMatrix(list(ids), np.asarray(matrix, dtype=float), scope)


class TestPearson:
    def test_hand_oracles(self):
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / np.sqrt(84 / 9))
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.9819805, abs=1e-7)
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_constant_series_is_zero(self):
        assert pearson([1, 1, 1], [1, 2, 3]) == 0.0
        assert pearson([1, 2, 3], [5, 5, 5]) == 0.0

    def test_matches_numpy_corrcoef(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(size=20)
            y = rng.normal(size=20) + 0.5 * x
            assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)

    def test_validation(self):
        with pytest.raises(UsageError):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(UsageError):
            pearson([1], [2])


class TestCorrelationMatrix:
    def test_within_category_zeroes_cross_group(self):
        factors = [
            FactorDescriptor("a", "Incidents", "m0", "annual", 1),
            FactorDescriptor("b", "Incidents", "m1", "annual", 1),
            FactorDescriptor("c", "Sailing", "m2", "annual", 1),
        ]
        catalog = FactorCatalog(factors, DecaySchedule())
        rng = np.random.default_rng(1)
        base = rng.normal(size=100)
        X = np.column_stack([base, base + 0.1 * rng.normal(size=100),
                             base + 0.1 * rng.normal(size=100)])
        scoped = correlation_matrix(X, catalog, "WithinCategory")
        assert abs(scoped.r("a", "b")) > 0.9
        assert scoped.r("a", "c") == 0.0     # cross-category masked
        unscoped = correlation_matrix(X, catalog, "Global")
        assert abs(unscoped.r("a", "c")) > 0.9
        assert unscoped.r("a", "b") == pytest.approx(pearson(X[:, 0], X[:, 1]))

    def test_constant_column_correlates_zero(self):
        catalog = flat_catalog(2)
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        cm = correlation_matrix(X, catalog, "Global")
        assert cm.r("f00", "f01") == 0.0
        assert cm.r("f00", "f00") == 0.0

    def test_doc_secondary_scoping(self):
        factors = [
            FactorDescriptor("sev", "DOCPerformance", "doc_avg_severity", "annual", 1),
            FactorDescriptor("det", "DOCPerformance", "doc_total_detentions", "annual", 1),
        ]
        catalog = FactorCatalog(factors, DecaySchedule())
        rng = np.random.default_rng(2)
        base = rng.normal(size=50)
        X = np.column_stack([base, base])
        cm = correlation_matrix(X, catalog, "WithinCategory")
        # same primary category but different secondary groups -> masked
        assert cm.r("sev", "det") == 0.0


class TestSlidingFilter:
    def test_worked_example_window6(self):
        # 8 factors, w=6: round 1 anchors #1 and removes #2 and #3 (the only
        # in-window pairs above threshold); later rounds remove nothing
        ids = [f"#{i}" for i in range(1, 9)]
        m = np.eye(8)
        m[0, 1] = m[1, 0] = 0.9
        m[0, 2] = m[2, 0] = 0.8
        m[0, 7] = m[7, 0] = 0.95  # outside round 1's window: never checked vs #1
        corr = corr_from(ids, m)
        rank = ImportanceRank(ids, np.linspace(1, 0.3, 8))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=0.5, window=6, scope="Global"))
        assert res.trace[0].anchor == "#1"
        assert [fid for fid, _ in res.trace[0].removed] == ["#2", "#3"]
        # after removals #8 is at in-window distance from #1 only in later
        # rounds where #1 is no longer the anchor -> #8 survives
        assert res.rank.factor_ids == ["#1", "#4", "#5", "#6", "#7", "#8"]

    def test_later_rounds_catch_distant_pairs(self):
        # w=2, rank [a, b, c], only r(b, c) high: round 1 checks (a, b) and
        # keeps everything; round 2 anchors b against c and removes it
        ids = ["a", "b", "c"]
        m = np.eye(3)
        m[1, 2] = m[2, 1] = 0.9
        corr = corr_from(ids, m)
        rank = ImportanceRank(ids, np.array([3.0, 2.0, 1.0]))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=0.5, window=2, scope="Global"))
        assert res.rank.factor_ids == ["a", "b"]
        assert res.trace[1].anchor == "b"

    def test_final_rank_can_hold_in_window_pairs(self):
        # Single-pass witness: w=2, r(a, b) and r(a, c) both high. Round 1
        # removes b; c then sits next to a in the final rank, but a never
        # anchors a second round, so the above-threshold pair (a, c)
        # legitimately survives. The guarantee is round-local, not a
        # property of the final coordinates.
        ids = ["a", "b", "c"]
        m = np.eye(3)
        m[0, 1] = m[1, 0] = 0.9
        m[0, 2] = m[2, 0] = 0.8
        corr = corr_from(ids, m)
        rank = ImportanceRank(ids, np.array([3.0, 2.0, 1.0]))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=0.5, window=2, scope="Global"))
        assert [fid for fid, _ in res.trace[0].removed] == ["b"]
        assert res.rank.factor_ids == ["a", "c"]
        assert abs(corr.r("a", "c")) > 0.5  # survivor pair above threshold

    def test_tau_one_is_noop(self):
        rng = np.random.default_rng(3)
        catalog = flat_catalog(12)
        X = rng.normal(size=(60, 12))
        corr = correlation_matrix(X, catalog, "Global")
        rank = ImportanceRank(catalog.ids(), np.linspace(1, 0, 12))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=1.0, window=5, scope="Global"))
        assert res.rank.factor_ids == rank.factor_ids
        assert res.removed_ids() == []

    def test_window_longer_than_rank(self):
        ids = ["a", "b", "c"]
        m = np.eye(3)
        m[0, 2] = m[2, 0] = 0.9
        corr = corr_from(ids, m)
        rank = ImportanceRank(ids, np.array([1.0, 0.5, 0.1]))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=0.5, window=50, scope="Global"))
        assert res.rank.factor_ids == ["a", "b"]

    def test_negative_correlation_absolute_mode(self):
        ids = ["a", "b"]
        m = np.array([[1.0, -0.9], [-0.9, 1.0]])
        corr = corr_from(ids, m)
        rank = ImportanceRank(ids, np.array([1.0, 0.5]))
        res = sliding_filter(rank, corr, FilterConfig(r_tau=0.5, window=2, scope="Global"))
        assert res.rank.factor_ids == ["a"]
        res2 = sliding_filter(rank, corr,
                              FilterConfig(r_tau=0.5, window=2, scope="Global",
                                           use_absolute=False))
        assert res2.rank.factor_ids == ["a", "b"]

    def test_replay_randomized(self):
        rng = np.random.default_rng(7)
        for trial in range(30):
            n = int(rng.integers(4, 25))
            catalog = flat_catalog(n)
            base = rng.normal(size=(80, 3))
            mix = rng.normal(size=(3, n))
            X = base @ mix + 0.5 * rng.normal(size=(80, n))
            corr = correlation_matrix(X, catalog, "Global")
            imp = np.sort(rng.random(n))[::-1]
            rank = ImportanceRank(catalog.ids(), imp)
            cfg = FilterConfig(r_tau=float(rng.uniform(0.3, 0.95)),
                               window=int(rng.integers(2, n + 2)), scope="Global")
            res = sliding_filter(rank, corr, cfg)
            states = replay_trace(rank, res)
            if states:
                assert states[-1] == res.rank.factor_ids
            # round-local guarantee: each removal sits inside that round's
            # window and exceeds the threshold against that round's anchor
            current = list(rank.factor_ids)
            for i, rnd in enumerate(res.trace):
                assert current[i] == rnd.anchor
                window = current[i + 1:]
                for fid, r in rnd.removed:
                    # removal must lie inside the round-start window and
                    # exceed the threshold against that round's anchor
                    assert window.index(fid) < cfg.window - 1
                    assert abs(r) > cfg.r_tau
                    assert r == pytest.approx(corr.r(rnd.anchor, fid))
                gone = {fid for fid, _ in rnd.removed}
                current = [f for f in current if f not in gone]
            assert current == res.rank.factor_ids

    def test_validation(self):
        ids = ["a", "b"]
        corr = corr_from(ids, np.eye(2))
        with pytest.raises(UsageError):
            sliding_filter(ImportanceRank([], np.array([])), corr,
                           FilterConfig(scope="Global"))
        with pytest.raises(DataError):
            sliding_filter(ImportanceRank(["z"], np.array([1.0])), corr,
                           FilterConfig(scope="Global"))
        with pytest.raises(UsageError):
            FilterConfig(r_tau=0.0)
        with pytest.raises(UsageError):
            FilterConfig(window=1)
