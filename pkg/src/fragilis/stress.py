"""Monte Carlo stress testing of an appraisal against fat-tailed overruns.

Each trial draws a capex overrun multiplier, an optional schedule slippage
(converted to years of delay), and an optional benefit shortfall, applies
them to the model, and tests whether the BCR falls below 1. Trial draws are
counter-based, a pure function of (seed, trial index, variable tag), so
results are bit-identical no matter how trials are chunked or parallelized.

Under the stress semantics (capex scaled in place, benefits and O&M shifted
together), per-trial NPV and BCR reduce exactly to three present values:

    npv(k, b, d) = b * x * B - k * C - x * O      with x = (1+r)**-d
    bcr(k, b, d) = b * x * B / (k * C + x * O)

where B, C, O are the unstressed present values of benefits, capex, and O&M.
run_stress evaluates that factorization vectorized; its equivalence to the
literal apply_stress path is covered by tests.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _rng
from .cashflow import AppraisalModel, apply_stress, bcr, irr, net_stream
from .dists import QuantileDistribution, dist_from_dict
from .errors import InputError

CAPEX_TAG = 1
SCHEDULE_TAG = 2
SHORTFALL_TAG = 3

DEFAULT_NPV_QUANTILES = (0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95)
_DEFAULT_CHUNK = 262_144


@dataclass(frozen=True, slots=True)
class StressConfig:
    """Inputs of one stress run.

    schedule_dist draws slippage ratios; delay years are derived as
    (slippage - 1) * est_duration_years, floored at zero (early completion is
    not credited). shortfall is either a fixed fraction in [0, 1) or a
    distribution whose support must stay inside (0, 1), which requires a
    bounded (negative-shape) tail.
    """

    n_trials: int
    seed: int
    capex_dist: QuantileDistribution
    schedule_dist: QuantileDistribution | None = None
    est_duration_years: float | None = None
    shortfall: float | QuantileDistribution = 0.0

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise InputError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.schedule_dist is not None:
            if self.est_duration_years is None or not self.est_duration_years > 0:
                raise InputError(
                    "schedule stress needs est_duration_years > 0 to turn slippage into delay"
                )
        if isinstance(self.shortfall, QuantileDistribution):
            upper = _support_upper(self.shortfall)
            if not upper <= 1.0:
                raise InputError(
                    f"shortfall distribution support must stay within (0, 1); "
                    f"upper endpoint is {upper}"
                )
        elif not 0.0 <= float(self.shortfall) < 1.0:
            raise InputError(f"fixed shortfall must be in [0, 1), got {self.shortfall}")

    def to_dict(self) -> dict:
        doc: dict = {
            "n_trials": self.n_trials,
            "seed": self.seed,
            "capex_dist": self.capex_dist.to_dict(),
        }
        if self.schedule_dist is not None:
            doc["schedule_dist"] = self.schedule_dist.to_dict()
            doc["est_duration_years"] = self.est_duration_years
        if isinstance(self.shortfall, QuantileDistribution):
            doc["shortfall"] = self.shortfall.to_dict()
        else:
            doc["shortfall"] = float(self.shortfall)
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "StressConfig":
        try:
            shortfall_doc = doc.get("shortfall", 0.0)
            return StressConfig(
                n_trials=int(doc["n_trials"]),
                seed=int(doc["seed"]),
                capex_dist=dist_from_dict(doc["capex_dist"]),
                schedule_dist=(
                    dist_from_dict(doc["schedule_dist"]) if "schedule_dist" in doc else None
                ),
                est_duration_years=doc.get("est_duration_years"),
                shortfall=(
                    dist_from_dict(shortfall_doc)
                    if isinstance(shortfall_doc, dict)
                    else float(shortfall_doc)
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed stress config document: {exc}") from None


def _support_upper(dist: QuantileDistribution) -> float:
    if dist.tail.shape >= 0.0:
        return math.inf
    return dist.anchor_xs[-1] + dist.tail.scale / -dist.tail.shape


@dataclass(frozen=True, slots=True)
class StressResult:
    """Aggregates of one stress run; npv_quantiles maps p to money."""

    p_break: float
    p_break_se: float
    npv_quantiles: dict[float, float]
    mean_npv: float
    n_trials: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "p_break": self.p_break,
            "p_break_se": self.p_break_se,
            "npv_quantiles": {f"{p:g}": v for p, v in self.npv_quantiles.items()},
            "mean_npv": self.mean_npv,
            "n_trials": self.n_trials,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def quantiles_csv(self) -> str:
        lines = ["p,npv"]
        lines += [f"{p:g},{v!r}" for p, v in sorted(self.npv_quantiles.items())]
        return "\n".join(lines) + "\n"


def _trial_arrays(
    model: AppraisalModel, config: StressConfig, start: int, stop: int
) -> tuple[np.ndarray, np.ndarray]:
    """(npv, bcr) for trial indices [start, stop), via the PV factorization."""
    pv_b = model.pv_benefits()
    pv_c = model.pv_capex()
    pv_o = model.pv_om()
    r = model.discount_rate

    k = config.capex_dist.sample_array(_rng.uniforms(config.seed, CAPEX_TAG, start, stop))

    if config.schedule_dist is not None:
        slippage = config.schedule_dist.sample_array(
            _rng.uniforms(config.seed, SCHEDULE_TAG, start, stop)
        )
        delay = np.maximum(slippage - 1.0, 0.0) * config.est_duration_years
        x = (1.0 + r) ** -delay
    else:
        x = np.ones(stop - start)

    if isinstance(config.shortfall, QuantileDistribution):
        s = config.shortfall.sample_array(
            _rng.uniforms(config.seed, SHORTFALL_TAG, start, stop)
        )
    else:
        s = np.full(stop - start, float(config.shortfall))

    gain = (1.0 - s) * x * pv_b
    pain = k * pv_c + x * pv_o
    return gain - pain, gain / pain


def run_stress(
    model: AppraisalModel,
    config: StressConfig,
    quantile_ps: Sequence[float] = DEFAULT_NPV_QUANTILES,
    chunk_size: int = _DEFAULT_CHUNK,
    workers: int = 1,
) -> StressResult:
    """Monte Carlo break probability and NPV distribution for a model.

    chunk_size and workers only steer execution; the counter-based draws and
    the order-insensitive aggregation (exact fsum, sort-based quantiles) make
    the result bit-identical for any chunking or worker count.
    """
    if chunk_size < 1:
        raise InputError("chunk_size must be >= 1")
    if workers < 1:
        raise InputError("workers must be >= 1")
    n = config.n_trials
    npvs = np.empty(n)
    breaks = np.empty(n, dtype=bool)

    def fill(start: int, stop: int) -> None:
        npv_part, bcr_part = _trial_arrays(model, config, start, stop)
        npvs[start:stop] = npv_part
        breaks[start:stop] = bcr_part < 1.0

    spans = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    if workers == 1 or len(spans) == 1:
        for start, stop in spans:
            fill(start, stop)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: fill(*span), spans))

    n_broken = int(np.count_nonzero(breaks))
    p_break = n_broken / n
    se = math.sqrt(p_break * (1.0 - p_break) / n)
    quantiles = {
        float(p): float(np.quantile(npvs, p, method="linear")) for p in quantile_ps
    }
    mean_npv = math.fsum(npvs) / n  # exact sum: independent of trial order
    return StressResult(p_break, se, quantiles, mean_npv, n, config.seed)


def p_break_analytic(dist: QuantileDistribution, k_star: float) -> float:
    """Break probability of a pure capex stress in closed form: the chance
    the overrun multiplier reaches the break-even ratio, 1 - CDF(k*)."""
    if not k_star > 0:
        raise InputError(f"break-even ratio must be positive, got {k_star}")
    return 1.0 - dist.cdf(k_star)


@dataclass(frozen=True, slots=True)
class GridCell:
    irr: float | None
    bcr: float


@dataclass(frozen=True, slots=True)
class SensitivityGrid:
    """Appraisal outcomes across joint benefit/cost multiplier scenarios.

    Rows follow cost_mults, columns follow benefit_mults, in the order given.
    Cells where the stressed net stream has no IRR carry irr=None.
    """

    benefit_mults: tuple[float, ...]
    cost_mults: tuple[float, ...]
    cells: tuple[tuple[GridCell, ...], ...]

    def to_dict(self) -> dict:
        return {
            "benefit_mults": list(self.benefit_mults),
            "cost_mults": list(self.cost_mults),
            "irr": [[c.irr for c in row] for row in self.cells],
            "bcr": [[c.bcr for c in row] for row in self.cells],
        }

    def to_csv(self) -> str:
        header = "cost_mult\\benefit_mult," + ",".join(f"{b:g}" for b in self.benefit_mults)
        lines = [header]
        for k, row in zip(self.cost_mults, self.cells):
            cells = ",".join("" if c.irr is None else repr(c.irr) for c in row)
            lines.append(f"{k:g},{cells}")
        return "\n".join(lines) + "\n"


def sensitivity_grid(
    model: AppraisalModel,
    benefit_mults: Sequence[float],
    cost_mults: Sequence[float],
) -> SensitivityGrid:
    """IRR and BCR for every (cost multiplier, benefit multiplier) pair."""
    if any(b <= 0 for b in benefit_mults) or any(k <= 0 for k in cost_mults):
        raise InputError("grid multipliers must be positive")
    rows = []
    for k in cost_mults:
        row = []
        for b in benefit_mults:
            stressed = apply_stress(model, cost_mult=k, benefit_mult=b, delay_years=0.0)
            row.append(GridCell(irr(net_stream(stressed)), bcr(stressed)))
        rows.append(tuple(row))
    return SensitivityGrid(tuple(float(b) for b in benefit_mults),
                           tuple(float(k) for k in cost_mults), tuple(rows))


@dataclass(frozen=True, slots=True)
class ContingencyResult:
    """Budget uplift sized to a coverage quantile of the overrun distribution."""

    coverage: float
    contingency: float  # capex uplift fraction, quantile(p) - 1
    adjusted_bcr: float
    proceed: bool

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "contingency": self.contingency,
            "adjusted_bcr": self.adjusted_bcr,
            "decision": "proceed" if self.proceed else "do-not-proceed",
        }


def size_contingency(
    model: AppraisalModel, capex_dist: QuantileDistribution, coverage: float
) -> ContingencyResult:
    """Contingency at a coverage level and the BCR after funding it.

    The uplift c = quantile(coverage) - 1 restates the budget at the chosen
    percentile of the overrun distribution; the project clears appraisal only
    if its BCR stays above 1 with capex scaled by (1 + c).
    """
    if not 0.0 < coverage < 1.0:
        raise InputError(f"coverage must lie strictly inside (0, 1), got {coverage}")
    c = capex_dist.quantile(coverage) - 1.0
    adjusted = bcr(apply_stress(model, cost_mult=1.0 + c))
    return ContingencyResult(coverage, c, adjusted, adjusted > 1.0)
