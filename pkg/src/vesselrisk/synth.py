"""Synthetic fleet generator with planted ground-truth risk drivers.

History streams (deficiencies, detentions, sailing, warmup incidents) are
Poisson draws whose rates vary with per-(vessel, year) propensities, which
keeps annual factor variants of one measure only moderately correlated.
After a five-year warmup, incidents are drawn in year blocks aligned with
the annual factor windows, from a rate exponential in a latent risk score,
itself a linear function of the planted factors' fleet-standardized
realized values plus noise: the planted factors drive the next-year risk
label, everything else is noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import UsageError
from .events import (EventStore, DeficiencyRecord, DetentionRecord, FlagDemeritRecord,
                     IncidentRecord, MembershipInterval, SailingDay, VesselProfile, day_of, date_of)
from .factors import FactorCatalog, FactorEvaluator, YEAR_DAYS, build_catalog

HALF_YEAR = 182

_PROFILE_SCALES = {
    "dwt": (10.0, 0.6), "max_dwt": (10.3, 0.6), "depth": (2.6, 0.3),
    "draught": (2.3, 0.3), "gross_tonnage": (9.8, 0.6), "length_bp": (5.1, 0.25),
    "length_oa": (5.2, 0.25), "net_tonnage": (9.3, 0.6),
}


@dataclass(frozen=True)
class SynthConfig:
    n_vessels: int = 300
    n_doc_companies: int = 20
    n_flags: int = 10
    span_years: int = 8
    start: date = date(2015, 1, 1)
    effect_spec: tuple[tuple[str, float], ...] = ()
    noise_scale: float = 1.0
    incident_base_rate: float = 0.18   # expected incidents per vessel-year at latent 0
    latent_gain: float = 0.8
    switch_prob: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.span_years < 7:
            raise UsageError("span must cover at least 7 years (5y factors + 1y label + spread)")
        if self.n_vessels < 1 or self.n_doc_companies < 1 or self.n_flags < 1:
            raise UsageError("entity counts must be positive")
        if self.noise_scale < 0:
            raise UsageError("noise_scale must be non-negative")


@dataclass
class GroundTruth:
    informative: list[str]
    # block start day -> latent risk per vessel (aligned with vessel_order)
    latent: dict[int, np.ndarray] = field(default_factory=dict)
    vessel_order: list[str] = field(default_factory=list)


def _vessel_rng(seed: int, v: int, tag: int) -> np.random.Generator:
    return np.random.default_rng((seed, v, tag))


def default_datestamps(config: SynthConfig) -> list[date]:
    """Year-spaced datestamps that fit 5y of factors and 1y of label.

    Stamps sit on the generator's 365-day block boundaries so each label
    window coincides with exactly one latent-risk block.
    """
    first = day_of(config.start) + 5 * YEAR_DAYS
    last = day_of(config.start) + config.span_years * YEAR_DAYS - YEAR_DAYS
    stamps = []
    d = first
    while d <= last:
        stamps.append(date_of(d))
        d += YEAR_DAYS
    return stamps


def generate(config: SynthConfig, catalog: FactorCatalog | None = None
             ) -> tuple[EventStore, GroundTruth]:
    catalog = catalog or build_catalog()
    known = set(catalog.ids())
    for fid, _ in config.effect_spec:
        if fid not in known:
            raise UsageError(f"effect_spec factor {fid!r} not in catalog")

    seed = config.seed
    start_day = day_of(config.start)
    end_day = start_day + config.span_years * YEAR_DAYS
    warmup_end = start_day + 5 * YEAR_DAYS
    vessels = [f"V{v:04d}" for v in range(config.n_vessels)]
    docs = [f"D{i:03d}" for i in range(config.n_doc_companies)]
    flags = [f"F{i:03d}" for i in range(config.n_flags)]

    profiles = []
    memberships = []
    deficiencies = []
    detentions = []
    sailing = []
    incidents: list[IncidentRecord] = []

    # flag demerits per (flag, calendar year)
    flag_rng = np.random.default_rng((seed, 7001))
    flag_demerits = []
    years = range(config.start.year, date_of(end_day).year + 1)
    for fl in flags:
        for y in years:
            flag_demerits.append(FlagDemeritRecord(fl, y, int(flag_rng.poisson(3.0))))

    def random_memberships(v: int, kind: str, pool: list[str], tag: int):
        rng = _vessel_rng(seed, v, tag)
        first = pool[int(rng.integers(len(pool)))]
        if rng.random() < config.switch_prob:
            cut = start_day + int(rng.integers(YEAR_DAYS, config.span_years * YEAR_DAYS - YEAR_DAYS))
            second = pool[int(rng.integers(len(pool)))]
            memberships.append(MembershipInterval(vessels[v], kind, first,
                                                  date_of(start_day), date_of(cut)))
            memberships.append(MembershipInterval(vessels[v], kind, second,
                                                  date_of(cut), date_of(end_day)))
        else:
            memberships.append(MembershipInterval(vessels[v], kind, first,
                                                  date_of(start_day), date_of(end_day)))

    for v in range(config.n_vessels):
        rng = _vessel_rng(seed, v, 1)
        fields = {}
        for name, (mu, sigma) in _PROFILE_SCALES.items():
            fields[name] = float(np.exp(rng.normal(mu, sigma)))
        profiles.append(VesselProfile(vessels[v], **fields))
        random_memberships(v, "DOC", docs, 2)
        random_memberships(v, "Flag", flags, 3)

        for y in range(config.span_years):
            y_start = start_day + y * YEAR_DAYS
            y_len = min(YEAR_DAYS, end_day - y_start)
            ry = _vessel_rng(seed, v, 100 + y)
            # PSC inspections with deficiency counts
            for _ in range(int(ry.poisson(2.0))):
                d = y_start + int(ry.integers(y_len))
                lam = 2.0 * np.exp(0.8 * ry.normal())
                deficiencies.append(DeficiencyRecord(vessels[v], date_of(d), int(ry.poisson(lam))))
            # detentions
            for _ in range(int(ry.poisson(0.5 * np.exp(0.7 * ry.normal())))):
                d = y_start + int(ry.integers(y_len))
                detentions.append(DetentionRecord(vessels[v], date_of(d)))
            # sailing: a random subset of days with lognormal-ish distances
            n_days = min(y_len, 20 + int(ry.poisson(25 * np.exp(0.5 * ry.normal()))))
            days = ry.choice(y_len, size=n_days, replace=False)
            level = np.exp(0.4 * ry.normal())
            for dd in sorted(days):
                dist = float(ry.uniform(50, 300) * level)
                sailing.append(SailingDay(vessels[v], date_of(y_start + int(dd)), dist))

    # warmup incidents: propensity-driven
    for v in range(config.n_vessels):
        rng = _vessel_rng(seed, v, 4)
        day = start_day
        while day < warmup_end:
            block = min(HALF_YEAR, warmup_end - day)
            lam = config.incident_base_rate * np.exp(0.6 * rng.normal()) * block / YEAR_DAYS
            for _ in range(int(rng.poisson(lam))):
                d = day + int(rng.integers(block))
                cat = ("A", "B", "C")[int(rng.choice(3, p=(0.08, 0.25, 0.67)))]
                incidents.append(IncidentRecord(vessels[v], date_of(d), cat))
            day += block

    planted = [catalog.get(fid) for fid, _ in config.effect_spec]
    coefs = np.array([c for _, c in config.effect_spec])
    truth = GroundTruth([fid for fid, _ in config.effect_spec], vessel_order=list(vessels))

    def build_store() -> EventStore:
        return EventStore(incidents, deficiencies, detentions, sailing,
                          memberships, flag_demerits, profiles)

    # post-warmup incidents: latent-driven, generated chronologically in
    # year blocks aligned with the annual factor windows, so each block's
    # latent only looks at completed history and each planted annual factor
    # maps onto exactly one block
    block_start = warmup_end
    while block_start < end_day:
        block = min(YEAR_DAYS, end_day - block_start)
        store = build_store()
        if planted:
            evaluator = FactorEvaluator(store, catalog)
            raw = np.zeros((config.n_vessels, len(planted)))
            for v in range(config.n_vessels):
                series = evaluator.annual_series(vessels[v], block_start)
                prof = store.profiles[vessels[v]].values()
                for j, desc in enumerate(planted):
                    raw[v, j] = evaluator.factor_value(desc, series, prof)
            raw = np.nan_to_num(raw)
            mu = raw.mean(axis=0)
            sd = raw.std(axis=0)
            sd[sd == 0] = 1.0
            signal = ((raw - mu) / sd) @ coefs
        else:
            signal = np.zeros(config.n_vessels)
        noise_rng = np.random.default_rng((seed, 8000, block_start))
        latent = signal + config.noise_scale * noise_rng.standard_normal(config.n_vessels)
        truth.latent[block_start] = latent
        for v in range(config.n_vessels):
            rng = np.random.default_rng((seed, 9000, block_start, v))
            lam = config.incident_base_rate * np.exp(config.latent_gain * latent[v]) * block / YEAR_DAYS
            n_inc = int(rng.poisson(min(lam, 12.0)))
            if n_inc == 0:
                continue
            # category mix tilts toward A as latent risk grows
            wa = 0.08 * np.exp(0.9 * latent[v])
            probs = np.array([wa, 0.25, 0.67])
            probs /= probs.sum()
            for _ in range(n_inc):
                d = block_start + int(rng.integers(block))
                cat = ("A", "B", "C")[int(rng.choice(3, p=probs))]
                incidents.append(IncidentRecord(vessels[v], date_of(d), cat))
        block_start += block

    return build_store(), truth
