"""SMOTE interpolation, Tomek-link cleaning and the combined resampler."""

import numpy as np
import pytest

from vesselrisk.errors import DataError, UsageError
from vesselrisk.factors import DecaySchedule, FactorCatalog, FactorDescriptor, LabeledDataset
from vesselrisk.resample import ResampleConfig, smote, smote_tomek, tomek_links


def tiny_catalog(m: int) -> FactorCatalog:
    factors = [FactorDescriptor(f"f{i:02d}", "Incidents", f"m{i}", "annual", 1)
               for i in range(m)]
    return FactorCatalog(factors, DecaySchedule())


def make_dataset(X, y) -> LabeledDataset:
    X = np.asarray(X, dtype=float)
    return LabeledDataset(X, np.asarray(y, dtype=np.int64), tiny_catalog(X.shape[1]))


class TestSmote:
    def test_synthetics_are_convex_combinations(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 3))
        y = np.array([0] * 30 + [1] * 10)
        ds = make_dataset(X, y)
        rows, prov = smote(ds, 1, 25, k=3, seed=7)
        assert rows.shape == (25, 3)
        for i, (a, b) in prov.items():
            assert y[a] == 1 and y[b] == 1
            d = X[b] - X[a]
            # x = a + u*(b-a): solve u from the first non-degenerate axis
            j = int(np.argmax(np.abs(d)))
            u = (rows[i, j] - X[a, j]) / d[j]
            assert -1e-9 <= u <= 1 + 1e-9
            np.testing.assert_allclose(rows[i], X[a] + u * d, atol=1e-9)

    def test_two_member_class_endpoints(self):
        # only neighbor choice is the other member; u in [0, 1] means every
        # synthetic lies on the segment between the two originals
        X = np.array([[0.0, 0.0], [1.0, 2.0], [5.0, 5.0], [6.0, 6.0], [7.0, 7.0]])
        y = np.array([1, 1, 0, 0, 0])
        ds = make_dataset(X, y)
        with pytest.warns(UserWarning, match="clamped"):
            rows, prov = smote(ds, 1, 50, k=5, seed=3)
        t = rows[:, 1] / 2.0
        np.testing.assert_allclose(rows[:, 0], t, atol=1e-12)
        assert np.all((t >= 0) & (t <= 1))

    def test_parent_choice_roughly_uniform(self):
        # with k=1 each synthetic's parent is a uniform draw over the class
        rng = np.random.default_rng(1)
        X = rng.normal(size=(12, 2))
        y = np.array([1] * 10 + [0] * 2)
        ds = make_dataset(X, y)
        _, prov = smote(ds, 1, 10000, k=1, seed=11)
        counts = np.bincount([a for a, _ in prov.values()], minlength=10)[:10]
        expect = 1000.0
        sd = np.sqrt(10000 * 0.1 * 0.9)
        assert np.all(np.abs(counts - expect) < 3.5 * sd)

    def test_zero_draws_and_errors(self):
        X = np.arange(10.0).reshape(5, 2)
        ds = make_dataset(X, [0, 0, 0, 0, 1])
        rows, prov = smote(ds, 0, 0, k=2, seed=0)
        assert rows.shape == (0, 2) and prov == {}
        with pytest.raises(DataError, match=">= 2"):
            smote(ds, 1, 5, k=1, seed=0)

    def test_determinism(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 4))
        y = np.array([0] * 20 + [1] * 10)
        ds = make_dataset(X, y)
        a = smote(ds, 1, 15, k=3, seed=9)
        b = smote(ds, 1, 15, k=3, seed=9)
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1] == b[1]


class TestTomekLinks:
    def test_hand_oracle(self):
        # two tight cross-class pairs and one far-away point
        X = np.array([[0.0], [0.1], [10.0], [10.1], [50.0]])
        y = np.array([0, 1, 0, 1, 0])
        links = tomek_links(X, y)
        assert links == [(0, 1), (2, 3)]

    def test_same_class_pair_is_not_a_link(self):
        X = np.array([[0.0], [0.1], [10.0]])
        y = np.array([0, 0, 1])
        assert tomek_links(X, y) == []

    def test_mutuality_required(self):
        # b's nearest is c, so (a, b) is not mutual even though a's nearest is b
        X = np.array([[0.0], [1.0], [1.5]])
        y = np.array([0, 1, 1])
        assert tomek_links(X, y) == []


class TestSmoteTomek:
    def _imbalanced(self, n0=1000, n1=100, n2=10, seed=0):
        rng = np.random.default_rng(seed)
        X = np.vstack([
            rng.normal(0, 1, size=(n0, 4)),
            rng.normal(3, 1, size=(n1, 4)),
            rng.normal(6, 1, size=(n2, 4)),
        ])
        y = np.array([0] * n0 + [1] * n1 + [2] * n2)
        return make_dataset(X, y)

    def test_hits_explicit_targets_within_slack(self):
        ds = self._imbalanced()
        cfg = ResampleConfig(target_counts={"Low": 400, "Medium": 300, "High": 100}, seed=5)
        rs = smote_tomek(ds, cfg)
        counts = rs.dataset.class_counts()
        # Tomek cleaning may shave a few majority members off the targets
        assert counts["Low"] <= 400 and counts["Low"] >= 380
        assert counts["Medium"] <= 300 and counts["Medium"] >= 285
        assert counts["High"] <= 100 and counts["High"] >= 95
        assert rs.removed_by_tomek == 400 + 300 + 100 - rs.dataset.n_samples

    def test_majority_has_no_synthetics(self):
        ds = self._imbalanced()
        cfg = ResampleConfig(target_counts={"Low": 400, "Medium": 300, "High": 100}, seed=5)
        rs = smote_tomek(ds, cfg)
        syn = rs.dataset.synthetic
        assert syn is not None
        assert not np.any(syn & (rs.dataset.y == 0))
        assert np.any(syn & (rs.dataset.y == 2))

    def test_betweenness_via_provenance(self):
        ds = self._imbalanced(n0=200, n1=40, n2=8)
        cfg = ResampleConfig(target_counts={"Low": 100, "Medium": 80, "High": 40}, seed=2)
        rs = smote_tomek(ds, cfg)
        assert len(rs.provenance) > 0
        for row, (a, b) in rs.provenance.items():
            x = rs.dataset.X[row]
            pa, pb = rs.originals.X[a], rs.originals.X[b]
            assert rs.dataset.y[row] == rs.originals.y[a] == rs.originals.y[b]
            d = pb - pa
            j = int(np.argmax(np.abs(d)))
            u = (x[j] - pa[j]) / d[j] if d[j] != 0 else 0.0
            assert -1e-9 <= u <= 1 + 1e-9
            np.testing.assert_allclose(x, pa + u * d, atol=1e-8)

    def test_determinism(self):
        ds = self._imbalanced(n0=150, n1=30, n2=8)
        cfg = ResampleConfig(target_counts={0: 80, 1: 60, 2: 30}, seed=13)
        a = smote_tomek(ds, cfg)
        b = smote_tomek(ds, cfg)
        np.testing.assert_array_equal(a.dataset.X, b.dataset.X)
        np.testing.assert_array_equal(a.dataset.y, b.dataset.y)
        assert a.provenance == b.provenance

    def test_default_ratio_targets(self):
        ds = self._imbalanced(n0=500, n1=60, n2=12)
        rs = smote_tomek(ds, ResampleConfig(seed=1))
        counts = rs.dataset.class_counts()
        # default regime keeps Low > Medium > High
        assert counts["Low"] > counts["Medium"] > counts["High"] > 0

    def test_errors(self):
        X = np.arange(20.0).reshape(10, 2)
        ds = make_dataset(X, [0] * 10)
        with pytest.raises(DataError, match="2 classes"):
            smote_tomek(ds, ResampleConfig())
        ds2 = make_dataset(X, [0] * 9 + [2])
        with pytest.raises(DataError, match="single sample"):
            smote_tomek(ds2, ResampleConfig(target_counts={0: 5, 2: 4}))
        with pytest.raises(UsageError):
            ResampleConfig(k_neighbors=0)
        with pytest.raises(UsageError):
            ResampleConfig(target_counts={0: 0})
