"""Nonparametric machinery for analyzing reference-class ratio samples.

Four procedures: Gaussian kernel density traces, the two-sample Mann-Whitney
U test (exact by enumeration for small samples, tie-corrected normal
approximation otherwise), one-way ANOVA F across groups, and an OLS slope
trend F test. p-values for the F tests go through a continued-fraction
regularized incomplete beta kept to better than 1e-10 relative error, so any
alternative implementation agrees to that tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ComputeError, DegenerateSampleError, InputError
from .refclass import quantile

KDE_GRID_POINTS = 512
KDE_SPAN_BANDWIDTHS = 4.0
EXACT_ENUMERATION_LIMIT = 12  # run the exact U test when n + m <= this


# ---------------------------------------------------------------------------
# Kernel density


@dataclass(frozen=True, slots=True)
class DensityTrace:
    """Gaussian-kernel density evaluated on a uniform grid spanning the data
    range plus four bandwidths on each side."""

    grid: tuple[float, ...]
    density: tuple[float, ...]
    bandwidth: float

    def to_csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.grid, self.density))


def silverman_bandwidth(sample: Sequence[float]) -> float:
    """0.9 * min(sd, IQR/1.34) * n**-0.2, with the usual fallback to sd when
    the IQR is degenerate. Zero for a zero-variance sample."""
    n = len(sample)
    if n < 2:
        return 0.0
    sd = float(np.std(np.asarray(sample, dtype=float), ddof=1))
    iqr = quantile(sample, 0.75) - quantile(sample, 0.25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * n ** (-0.2)


def kde(sample: Sequence[float], bandwidth: float | None = None) -> DensityTrace:
    """Gaussian kernel density estimate on a 512-point grid.

    The default bandwidth follows Silverman's rule; a zero-variance sample
    has no data-driven scale, so an explicit bandwidth is then required.
    """
    if len(sample) < 1:
        raise InputError("kde requires at least one observation")
    data = np.asarray(sample, dtype=float)
    h = silverman_bandwidth(sample) if bandwidth is None else float(bandwidth)
    if not h > 0:
        if bandwidth is None:
            raise DegenerateSampleError(
                "sample has zero variance; pass an explicit bandwidth"
            )
        raise InputError(f"bandwidth must be positive, got {bandwidth}")
    lo = float(data.min()) - KDE_SPAN_BANDWIDTHS * h
    hi = float(data.max()) + KDE_SPAN_BANDWIDTHS * h
    grid = np.linspace(lo, hi, KDE_GRID_POINTS)
    z = (grid[:, None] - data[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(sample) * h * math.sqrt(2.0 * math.pi))
    return DensityTrace(tuple(grid.tolist()), tuple(dens.tolist()), h)


# ---------------------------------------------------------------------------
# Test results


@dataclass(frozen=True, slots=True)
class TestResult:
    """A test statistic with its p-value and provenance.

    method is "exact" when the p-value comes from the exact reference
    distribution (full enumeration for U, the F distribution for F tests) and
    "normal_approx" for the large-sample U approximation.
    """

    statistic: float
    p_value: float
    method: str
    n: int
    m: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "n": self.n,
            "m": self.m,
        }


# ---------------------------------------------------------------------------
# Mann-Whitney U


def _u_statistic(x: Sequence[float], y: Sequence[float]) -> float:
    """U for x against y: concordant pairs plus half the tied pairs."""
    gt = sum(1 for xi in x for yj in y if xi > yj)
    ties = sum(1 for xi in x for yj in y if xi == yj)
    return gt + 0.5 * ties


def _exact_two_sided_p(pooled: Sequence[float], n: int, u_obs: float) -> float:
    """Two-sided permutation p-value by full enumeration of group labelings."""
    center = n * (len(pooled) - n) / 2.0
    dev = abs(u_obs - center)
    hits = 0
    total = 0
    indices = range(len(pooled))
    for combo in itertools.combinations(indices, n):
        chosen = set(combo)
        gx = [pooled[i] for i in combo]
        gy = [pooled[i] for i in indices if i not in chosen]
        # U values land on a 0.5 grid, so exact comparison is safe
        if abs(_u_statistic(gx, gy) - center) >= dev:
            hits += 1
        total += 1
    return hits / total


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Two-sample Mann-Whitney U test.

    The statistic is U for x: the number of (x_i, y_j) pairs with x_i > y_j
    plus half the ties. For n + m <= 12 the two-sided p-value is exact by
    full enumeration; above that it uses the normal approximation with tie
    correction and continuity correction.
    """
    n, m = len(x), len(y)
    if n < 1 or m < 1:
        raise InputError("both samples must be non-empty")
    u = _u_statistic(x, y)

    if n + m <= EXACT_ENUMERATION_LIMIT:
        p = _exact_two_sided_p(list(x) + list(y), n, u)
        return TestResult(u, p, "exact", n, m)

    total = n + m
    mean = n * m / 2.0
    pooled = sorted(list(x) + list(y))
    tie_term = 0.0
    i = 0
    while i < total:
        j = i
        while j < total and pooled[j] == pooled[i]:
            j += 1
        t = j - i
        tie_term += t**3 - t
        i = j
    var = (n * m / 12.0) * ((total + 1) - tie_term / (total * (total - 1)))
    if var <= 0:
        return TestResult(u, 1.0, "normal_approx", n, m)  # all values tied
    diff = u - mean
    z = (abs(diff) - 0.5) / math.sqrt(var)  # continuity correction
    z = max(z, 0.0)
    p = min(1.0, 2.0 * _normal_sf(z))
    return TestResult(u, p, "normal_approx", n, m)


def overrun_bias_samples(ratios: Sequence[float]) -> tuple[list[float], list[float]]:
    """Split ratios into overrun magnitudes (ratio - 1 for ratios above 1)
    and underrun magnitudes (1 - ratio below 1), the comparison that asks
    whether estimate errors skew toward adverse outcomes."""
    over = [r - 1.0 for r in ratios if r > 1.0]
    under = [1.0 - r for r in ratios if r < 1.0]
    return over, under


# ---------------------------------------------------------------------------
# F distribution via regularized incomplete beta


def _betacf(a: float, b: float, x: float) -> float:
    """Lentz continued fraction for the incomplete beta (Numerical Recipes
    form), iterated until the step is below 1e-15."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ComputeError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to better than 1e-10 relative error for a, b > 0."""
    if not (a > 0 and b > 0):
        raise InputError("incomplete beta requires a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_value: float, df1: float, df2: float) -> float:
    """Survival function of the F(df1, df2) distribution."""
    if f_value <= 0.0:
        return 1.0
    if math.isinf(f_value):
        return 0.0
    x = df2 / (df2 + df1 * f_value)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


# ---------------------------------------------------------------------------
# One-way ANOVA and trend test


def one_way_f(groups: Sequence[Sequence[float]]) -> TestResult:
    """Classical one-way ANOVA F across two or more groups.

    statistic is MS_between / MS_within with an F(k-1, N-k) p-value. All
    groups being internally constant leaves no within-group variance and the
    ratio undefined.
    """
    if len(groups) < 2:
        raise InputError("one-way F requires at least two groups")
    sizes = [len(g) for g in groups]
    if any(s < 1 for s in sizes):
        raise InputError("every group must be non-empty")
    k = len(groups)
    total_n = sum(sizes)
    if total_n <= k:
        raise InputError("total observations must exceed the number of groups")
    grand = math.fsum(math.fsum(g) for g in groups) / total_n
    means = [math.fsum(g) / len(g) for g in groups]
    ss_between = math.fsum(len(g) * (mu - grand) ** 2 for g, mu in zip(groups, means))
    ss_within = math.fsum(
        math.fsum((v - mu) ** 2 for v in g) for g, mu in zip(groups, means)
    )
    df1, df2 = k - 1, total_n - k
    if ss_within == 0.0:
        raise DegenerateSampleError("zero within-group variance in every group")
    f_value = (ss_between / df1) / (ss_within / df2)
    return TestResult(f_value, f_sf(f_value, df1, df2), "exact", total_n, k)


@dataclass(frozen=True, slots=True)
class TrendResult:
    """OLS slope of y on x with the F = t**2 test of a zero slope."""

    statistic: float  # F with (1, n-2) df
    p_value: float
    method: str
    n: int
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "n": self.n,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def trend_f(x: Sequence[float], y: Sequence[float]) -> TrendResult:
    """Test for a linear time trend: OLS slope of y on x and its F statistic.

    A perfect nonconstant fit reports F = inf, p = 0; a constant y reports a
    zero slope with F = 0, p = 1.
    """
    n = len(x)
    if n != len(y):
        raise InputError("x and y must have equal length")
    if n < 3:
        raise InputError("trend test requires at least 3 points")
    xbar = math.fsum(x) / n
    ybar = math.fsum(y) / n
    sxx = math.fsum((xi - xbar) ** 2 for xi in x)
    if sxx == 0.0:
        raise InputError("all x values are equal; trend undefined")
    sxy = math.fsum((xi - xbar) * (yi - ybar) for xi, yi in zip(x, y))
    syy = math.fsum((yi - ybar) ** 2 for yi in y)
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    rss = math.fsum((yi - (intercept + slope * xi)) ** 2 for xi, yi in zip(x, y))
    rss = max(rss, 0.0)
    if syy == 0.0:  # constant response
        return TrendResult(0.0, 1.0, "exact", n, 0.0, ybar, 0.0)
    r2 = 1.0 - rss / syy
    if rss == 0.0:
        return TrendResult(math.inf, 0.0, "exact", n, slope, intercept, 1.0)
    f_value = slope * slope * sxx / (rss / (n - 2))
    return TrendResult(f_value, f_sf(f_value, 1, n - 2), "exact", n, slope, intercept, r2)
