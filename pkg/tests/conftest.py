"""Shared fixtures and small builders used across the test suite."""

from __future__ import annotations

from datetime import date

import numpy as np
import pytest

from vesselrisk.events import (DeficiencyRecord, DetentionRecord, EventStore,
                               FlagDemeritRecord, IncidentRecord, MembershipInterval,
                               SailingDay, VesselProfile)
from vesselrisk.factors import build_catalog

SPAN_START = date(2010, 1, 1)
SPAN_END = date(2022, 1, 1)


def make_profile(vessel_id: str = "V1", value: float = 1.0) -> VesselProfile:
    return VesselProfile(vessel_id, dwt=value, max_dwt=value, depth=value,
                         draught=value, gross_tonnage=value, length_bp=value,
                         length_oa=value, net_tonnage=value)


def basic_store(incidents=(), deficiencies=(), detentions=(), sailing=(),
                memberships=None, flag_demerits=None, profiles=None,
                vessel_ids=("V1",)) -> EventStore:
    """One-stop store builder: every vessel gets full-span DOC/Flag cover
    unless memberships are supplied explicitly."""
    if profiles is None:
        profiles = [make_profile(v) for v in vessel_ids]
    if memberships is None:
        memberships = []
        for v in vessel_ids:
            memberships.append(MembershipInterval(v, "DOC", "D1", SPAN_START, SPAN_END))
            memberships.append(MembershipInterval(v, "Flag", "F1", SPAN_START, SPAN_END))
    if flag_demerits is None:
        flag_demerits = [FlagDemeritRecord("F1", y, 0)
                         for y in range(SPAN_START.year - 1, SPAN_END.year + 1)]
    return EventStore(list(incidents), list(deficiencies), list(detentions),
                      list(sailing), list(memberships), list(flag_demerits),
                      list(profiles))


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()


def random_training_data(rng: np.random.Generator, n: int, m: int, n_classes: int = 3):
    """Random features with a label loosely tied to a linear score, so trees
    have something to split on but the problem is not degenerate."""
    X = rng.normal(size=(n, m))
    w = rng.normal(size=m)
    score = X @ w + 0.5 * rng.normal(size=n)
    edges = np.quantile(score, np.linspace(0, 1, n_classes + 1)[1:-1])
    y = np.digitize(score, edges)
    return X, y.astype(np.int64)
