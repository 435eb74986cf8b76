"""Fat-tailed overrun distributions built from published quantile anchors.

The inverse CDF is pieced together from a log-linear body through the anchor
points (starting at a positive floor at p=0) and a generalized-Pareto upper
tail above the last anchor. The tail can be given explicitly as (shape,
scale) or calibrated: the scale is pinned by matching the quantile slope at
the junction (which makes the density continuous there) and the shape is
solved so the analytic mean of the composed distribution hits a target.

Every anchor is reproduced exactly by quantile(); the mean, CDF, and partial
expectations all have closed forms, so Monte Carlo output can be checked
against analytic values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError, InputError

MAX_TAIL_SHAPE = 0.99  # calibrated shapes live in (0, 0.99); >= 1 means infinite mean
DEFAULT_FLOOR = 0.4  # suits overrun ratios: some projects underrun, none go to zero


@dataclass(frozen=True, slots=True)
class GeneralizedParetoTail:
    """GPD exceedance model above the last anchor.

    shape < 1 keeps the mean finite; negative shapes give a bounded tail with
    supremum threshold + scale/|shape|.
    """

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not self.shape < 1.0:
            raise InputError(f"tail shape must be < 1, got {self.shape}")
        if not self.scale > 0.0:
            raise InputError(f"tail scale must be > 0, got {self.scale}")

    def quantile_excess(self, q: float) -> float:
        """Excess over the threshold at exceedance quantile q in [0, 1)."""
        if self.shape == 0.0:
            return -self.scale * math.log1p(-q)
        return self.scale / self.shape * ((1.0 - q) ** -self.shape - 1.0)

    def cdf_excess(self, excess: float) -> float:
        if excess <= 0.0:
            return 0.0
        if self.shape == 0.0:
            return -math.expm1(-excess / self.scale)
        inner = 1.0 + self.shape * excess / self.scale
        if inner <= 0.0:  # beyond the bounded-tail endpoint
            return 1.0
        return 1.0 - inner ** (-1.0 / self.shape)

    def mean_excess(self) -> float:
        return self.scale / (1.0 - self.shape)


@dataclass(frozen=True, slots=True)
class QuantileDistribution:
    """Distribution over positive ratios pinned to (probability, value) anchors.

    anchor_ps / anchor_xs are strictly increasing; floor_x is the value at
    p=0. Between consecutive nodes the quantile function is exponential in p
    (linear in log value); above the last anchor it follows the GPD tail.
    mean_target records the calibration target when the tail was solved for.
    """

    anchor_ps: tuple[float, ...]
    anchor_xs: tuple[float, ...]
    floor_x: float
    tail: GeneralizedParetoTail
    mean_target: float | None = None

    def __post_init__(self) -> None:
        if not self.anchor_ps:
            raise InputError("at least one anchor required")
        if len(self.anchor_ps) != len(self.anchor_xs):
            raise InputError("anchor probability/value lists differ in length")
        if not self.floor_x > 0.0:
            raise InputError(f"floor value must be positive, got {self.floor_x}")
        prev_p, prev_x = 0.0, self.floor_x
        for p, x in zip(self.anchor_ps, self.anchor_xs):
            if not 0.0 < p < 1.0:
                raise InputError(f"anchor probability must be in (0, 1), got {p}")
            if p <= prev_p and prev_p != 0.0:
                raise InputError("anchor probabilities must be strictly increasing")
            if x <= prev_x:
                raise InputError(
                    "anchor values must be strictly increasing and above the floor"
                )
            prev_p, prev_x = p, x

    # -- quantile / CDF ------------------------------------------------------

    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        ps = np.concatenate(([0.0], np.asarray(self.anchor_ps, dtype=float)))
        xs = np.concatenate(([self.floor_x], np.asarray(self.anchor_xs, dtype=float)))
        return ps, xs

    def _node_lists(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return (0.0, *self.anchor_ps), (self.floor_x, *self.anchor_xs)

    def quantile(self, p: float) -> float:
        """Inverse CDF at p in (0, 1); anchors are returned exactly."""
        return float(self.quantile_array(np.asarray([p], dtype=float))[0])

    def quantile_array(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise InputError("quantile levels must lie strictly inside (0, 1)")
        ps, xs = self._nodes()
        log_xs = np.log(xs)
        p_last = ps[-1]
        out = np.empty_like(p)

        body = p <= p_last
        if np.any(body):
            pb = p[body]
            idx = np.searchsorted(ps, pb, side="left")
            lo = idx - 1
            frac = (pb - ps[lo]) / (ps[idx] - ps[lo])
            out[body] = np.exp(log_xs[lo] + frac * (log_xs[idx] - log_xs[lo]))
            exact = ps[idx] == pb  # pin anchors exactly, no exp/log round trip
            out_body = out[body]
            out_body[exact] = xs[idx][exact]
            out[body] = out_body

        tail = ~body
        if np.any(tail):
            q = (p[tail] - p_last) / (1.0 - p_last)
            if self.tail.shape == 0.0:
                excess = -self.tail.scale * np.log1p(-q)
            else:
                excess = (
                    self.tail.scale
                    / self.tail.shape
                    * ((1.0 - q) ** -self.tail.shape - 1.0)
                )
            out[tail] = xs[-1] + excess
        return out

    def cdf(self, x: float) -> float:
        """P(X <= x), inverting the piecewise quantile function."""
        ps, xs = self._nodes()
        if x <= self.floor_x:
            return 0.0
        if x >= xs[-1]:
            p_last = float(ps[-1])
            return p_last + (1.0 - p_last) * self.tail.cdf_excess(x - float(xs[-1]))
        idx = int(np.searchsorted(xs, x, side="left"))
        if xs[idx] == x:
            return float(ps[idx])
        lo = idx - 1
        frac = math.log(x / xs[lo]) / math.log(xs[idx] / xs[lo])
        return float(ps[lo] + frac * (ps[idx] - ps[lo]))

    def sample(self, u: float) -> float:
        """Inverse-CDF draw at uniform u in (0, 1); deterministic in u."""
        if not 0.0 < u < 1.0:
            raise InputError(f"u must lie strictly inside (0, 1), got {u}")
        return self.quantile(u)

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        return self.quantile_array(u)

    # -- analytic moments ----------------------------------------------------

    def body_mean(self) -> float:
        """Mean contribution of the log-linear body, i.e. the integral of the
        quantile function from 0 to the last anchor probability. Each segment
        integrates to (p_b - p_a) times the logarithmic mean of its endpoint
        values."""
        ps, xs = self._node_lists()
        total = 0.0
        for (pa, xa), (pb, xb) in zip(zip(ps, xs), zip(ps[1:], xs[1:])):
            if xb == xa:
                avg = xa
            else:
                avg = (xb - xa) / math.log(xb / xa)
            total += (pb - pa) * avg
        return total

    def mean(self) -> float:
        """Analytic mean of the composed distribution."""
        p_last = self.anchor_ps[-1]
        tail_mean = self.anchor_xs[-1] + self.tail.mean_excess()
        return self.body_mean() + (1.0 - p_last) * tail_mean

    def partial_mean(self, p_hi: float) -> float:
        """Integral of the quantile function over (0, p_hi); together with
        mean() this gives trimmed means in closed form."""
        if not 0.0 < p_hi < 1.0:
            raise InputError("p_hi must lie strictly inside (0, 1)")
        ps, xs = self._node_lists()
        total = 0.0
        for (pa, xa), (pb, xb) in zip(zip(ps, xs), zip(ps[1:], xs[1:])):
            if p_hi <= pa:
                return total
            top = min(pb, p_hi)
            x_top = xb if top == pb else float(self.quantile(top))
            if x_top == xa:
                avg = xa
            else:
                avg = (x_top - xa) / math.log(x_top / xa)
            total += (top - pa) * avg
            if top == p_hi:
                return total
        # remainder lies in the tail; integrate threshold + excess quantile:
        #   int_0^q sigma/xi ((1-t)^-xi - 1) dt, with w = 1 - q
        p_last = float(ps[-1])
        q_hi = (p_hi - p_last) / (1.0 - p_last)
        xi, sigma = self.tail.shape, self.tail.scale
        w = 1.0 - q_hi
        if xi != 0.0:
            integral_excess = (sigma / xi) * ((1.0 - w ** (1.0 - xi)) / (1.0 - xi) - q_hi)
        else:
            integral_excess = sigma * (w * math.log(w) - w + 1.0)
        return total + (1.0 - p_last) * (self.anchor_xs[-1] * q_hi + integral_excess)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "anchors": [{"p": p, "x": x} for p, x in zip(self.anchor_ps, self.anchor_xs)],
            "floor_x": self.floor_x,
            "tail": {"shape": self.tail.shape, "scale": self.tail.scale},
        }
        if self.mean_target is not None:
            d["mean_target"] = self.mean_target
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _junction_scale(anchor_ps: Sequence[float], anchor_xs: Sequence[float], floor_x: float) -> float:
    """GPD scale that matches the body's quantile slope at the junction,
    making the density continuous across it."""
    p_last = anchor_ps[-1]
    x_last = anchor_xs[-1]
    if len(anchor_ps) >= 2:
        p_prev, x_prev = anchor_ps[-2], anchor_xs[-2]
    else:
        p_prev, x_prev = 0.0, floor_x
    slope = x_last * math.log(x_last / x_prev) / (p_last - p_prev)
    return (1.0 - p_last) * slope


def build_quantile_dist(
    anchors: Sequence[tuple[float, float]],
    floor_x: float = DEFAULT_FLOOR,
    tail_shape: float | None = None,
    tail_scale: float | None = None,
    mean_target: float | None = None,
) -> QuantileDistribution:
    """Assemble a QuantileDistribution from anchors plus a tail choice.

    Pass (tail_shape, tail_scale) for an explicit tail, or mean_target to
    calibrate one: the scale follows from slope continuity at the junction
    and the shape is solved in (0, 0.99) so the analytic mean equals the
    target. Calibration fails if the target needs an infinite-mean tail
    (shape >= 1) or is below what the minimal tail already delivers.

    The floor default suits overrun-ratio data; distributions on other
    scales (e.g. shortfall fractions) need an explicit floor below their
    first anchor.
    """
    anchors = sorted((float(p), float(x)) for p, x in anchors)
    ps = tuple(p for p, _ in anchors)
    xs = tuple(x for _, x in anchors)

    explicit = tail_shape is not None or tail_scale is not None
    if explicit and mean_target is not None:
        raise InputError("give either an explicit tail or a mean target, not both")
    if explicit:
        if tail_shape is None or tail_scale is None:
            raise InputError("explicit tail needs both shape and scale")
        return QuantileDistribution(ps, xs, floor_x, GeneralizedParetoTail(tail_shape, tail_scale))
    if mean_target is None:
        raise InputError("tail unspecified: give (shape, scale) or a mean target")

    sigma = _junction_scale(ps, xs, floor_x)
    probe = QuantileDistribution(ps, xs, floor_x, GeneralizedParetoTail(0.5, sigma))
    body = probe.body_mean()
    p_last, x_last = ps[-1], xs[-1]
    tail_mass = 1.0 - p_last

    def mean_for(shape: float) -> float:
        return body + tail_mass * (x_last + sigma / (1.0 - shape))

    lo_mean = mean_for(1e-12)
    hi_mean = mean_for(MAX_TAIL_SHAPE)
    if mean_target >= hi_mean:
        raise CalibrationError(
            f"mean target {mean_target} unattainable: needs tail shape >= {MAX_TAIL_SHAPE} "
            f"(mean would have to exceed {hi_mean:.6g}; shape >= 1 means an infinite mean)"
        )
    if mean_target <= lo_mean:
        raise CalibrationError(
            f"mean target {mean_target} below the minimum {lo_mean:.6g} reachable with "
            "the slope-matched tail scale"
        )
    # mean_for is strictly increasing in shape: solve directly
    shape = 1.0 - sigma * tail_mass / (mean_target - body - tail_mass * x_last)
    dist = QuantileDistribution(
        ps, xs, floor_x, GeneralizedParetoTail(shape, sigma), mean_target=mean_target
    )
    achieved = dist.mean()
    if abs(achieved - mean_target) > 1e-6 * abs(mean_target):
        raise CalibrationError(
            f"calibration drifted: achieved mean {achieved} vs target {mean_target}"
        )
    return dist


def dist_from_dict(doc: dict) -> QuantileDistribution:
    """Build from the JSON document form; accepts either a resolved tail
    {shape, scale} or a calibration request {calibrate_mean}."""
    try:
        anchors = [(float(a["p"]), float(a["x"])) for a in doc["anchors"]]
        floor_x = float(doc["floor_x"])
        tail = doc["tail"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed distribution document: missing {exc}") from None
    if "calibrate_mean" in tail:
        return build_quantile_dist(anchors, floor_x, mean_target=float(tail["calibrate_mean"]))
    try:
        shape, scale = float(tail["shape"]), float(tail["scale"])
    except (KeyError, TypeError):
        raise InputError(
            "distribution tail must carry either calibrate_mean or shape and scale"
        ) from None
    dist = build_quantile_dist(anchors, floor_x, tail_shape=shape, tail_scale=scale)
    if "mean_target" in doc:
        dist = QuantileDistribution(
            dist.anchor_ps, dist.anchor_xs, dist.floor_x, dist.tail,
            mean_target=float(doc["mean_target"]),
        )
    return dist


def load_dist(path: str | Path) -> QuantileDistribution:
    with open(path, encoding="utf-8") as fh:
        return dist_from_dict(json.load(fh))
