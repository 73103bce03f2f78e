"""Synthetic fleet generator: determinism, label regime, planted signal."""

import numpy as np
import pytest

from vesselrisk.errors import UsageError
from vesselrisk.factors import assemble_dataset, build_catalog
from vesselrisk.synth import GroundTruth, SynthConfig, default_datestamps, generate


def small_config(**kw) -> SynthConfig:
    base = dict(n_vessels=120, n_doc_companies=8, n_flags=6, span_years=7, seed=0)
    base.update(kw)
    return SynthConfig(**base)


def test_same_seed_same_store():
    cfg = small_config()
    store_a, truth_a = generate(cfg)
    store_b, truth_b = generate(cfg)
    assert store_a.counts() == store_b.counts()
    for kind, frame in store_a.to_frames().items():
        assert frame.equals(store_b.to_frames()[kind])
    assert truth_a.informative == truth_b.informative
    for k in truth_a.latent:
        np.testing.assert_array_equal(truth_a.latent[k], truth_b.latent[k])


def test_different_seed_different_store():
    a, _ = generate(small_config(seed=0))
    b, _ = generate(small_config(seed=1))
    assert a.counts() != b.counts()


def test_default_labels_are_imbalanced_toward_low():
    catalog = build_catalog()
    store, _ = generate(small_config(n_vessels=200), catalog)
    ds = assemble_dataset(store, catalog, default_datestamps(small_config(n_vessels=200)))
    counts = ds.class_counts()
    assert counts["Low"] > counts["Medium"] > counts["High"] > 0


def test_datestamps_fit_store_span():
    cfg = small_config()
    store, _ = generate(cfg)
    catalog = build_catalog()
    stamps = default_datestamps(cfg)
    assert len(stamps) >= 2
    ds = assemble_dataset(store, catalog, stamps)  # must not raise
    assert ds.n_samples > 0


def test_config_validation():
    with pytest.raises(UsageError, match="7 years"):
        SynthConfig(span_years=6)
    with pytest.raises(UsageError, match="positive"):
        SynthConfig(n_vessels=0)
    with pytest.raises(UsageError, match="noise_scale"):
        SynthConfig(noise_scale=-1.0)
    with pytest.raises(UsageError, match="not in catalog"):
        generate(small_config(effect_spec=(("no_such_factor", 1.0),)))


def test_planted_factor_predicts_label():
    """A strongly planted factor must separate High from Low labels far
    better than an unplanted noise factor of the same family."""
    catalog = build_catalog()
    cfg = small_config(
        n_vessels=250,
        effect_spec=(("deficiency_count__annual_2", 1.5),),
        noise_scale=0.3,
        latent_gain=1.5,
        incident_base_rate=0.35,
        seed=3,
    )
    store, truth = generate(cfg, catalog)
    assert truth.informative == ["deficiency_count__annual_2"]
    ds = assemble_dataset(store, catalog, default_datestamps(cfg))
    y = ds.y.astype(float)

    def corr_with_label(fid):
        col = ds.X[:, catalog.index_of(fid)]
        return abs(np.corrcoef(col, y)[0, 1])

    planted = corr_with_label("deficiency_count__annual_2")
    noise = corr_with_label("sailing_days__annual_3")
    assert planted > 0.2
    assert planted > noise + 0.1


def test_latent_recorded_per_block():
    cfg = small_config(effect_spec=(("profile__dwt", 1.0),))
    _, truth = generate(cfg)
    # one latent vector per post-warmup year block
    assert len(truth.latent) == cfg.span_years - 5
    for latent in truth.latent.values():
        assert latent.shape == (cfg.n_vessels,)
        assert np.all(np.isfinite(latent))
    assert truth.vessel_order == [f"V{v:04d}" for v in range(cfg.n_vessels)]
