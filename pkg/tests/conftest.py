"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fragilis.cashflow import AppraisalModel, CashFlowStream
from fragilis.datasets import BIG_DAM_ANCHORS, BIG_DAM_FLOOR, BIG_DAM_MEAN
from fragilis.dists import QuantileDistribution, build_quantile_dist


def random_model(rng: np.random.Generator, r_range=(0.0, 0.25), with_om=True) -> AppraisalModel:
    """Random but valid appraisal model: upfront-ish capex, positive benefits,
    optional light O&M."""
    n_capex = int(rng.integers(1, 4))
    capex = CashFlowStream.of(
        (rng.uniform(0.0, 2.0), rng.uniform(50.0, 500.0)) for _ in range(n_capex)
    )
    n_ben = int(rng.integers(2, 12))
    benefits = CashFlowStream.of(
        (rng.uniform(1.0, 30.0), rng.uniform(10.0, 200.0)) for _ in range(n_ben)
    )
    n_om = int(rng.integers(0, 4)) if with_om else 0
    om = (
        CashFlowStream.of((rng.uniform(1.0, 30.0), rng.uniform(0.0, 20.0)) for _ in range(n_om))
        if n_om
        else CashFlowStream.zero()
    )
    return AppraisalModel(
        capex=capex,
        benefits=benefits,
        om_costs=om,
        discount_rate=float(rng.uniform(*r_range)),
    )


def near_degenerate_dist(value: float) -> QuantileDistribution:
    """All mass within ~1e-9 of one value; stands in for a point mass."""
    return build_quantile_dist(
        [(0.5, value)], floor_x=value * (1.0 - 1e-9), tail_shape=0.0, tail_scale=1e-12
    )


@pytest.fixture(scope="session")
def canonical_dist() -> QuantileDistribution:
    return build_quantile_dist(BIG_DAM_ANCHORS, BIG_DAM_FLOOR, mean_target=BIG_DAM_MEAN)
