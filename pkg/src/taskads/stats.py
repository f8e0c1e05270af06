"""Group-comparison statistics: descriptives, Levene, Welch ANOVA, Games-Howell.

The pipeline mirrors how heteroscedastic group comparisons are usually run:
Levene's test for variance homogeneity, Welch's ANOVA as the omnibus test
that tolerates unequal variances, and Games-Howell pairwise post-hocs on the
studentized-range distribution with Welch-adjusted degrees of freedom.

All functions are pure and accept either `Sample` objects or raw sequences.
P-values come from the in-house distribution code in `_dist` (deterministic
quadrature/series), not from an external stats library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ._dist import f_sf, studentized_range_sf, t_sf

DEFAULT_ALPHA = 0.05


class StatsError(Exception):
    pass


class EmptySample(StatsError):
    def __init__(self) -> None:
        super().__init__("sample has no values")


class InsufficientData(StatsError):
    pass


class ZeroVariance(StatsError):
    def __init__(self, group_name: str):
        super().__init__(f"group {group_name!r} has zero variance")


@dataclass(frozen=True)
class Sample:
    group_name: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if any(not math.isfinite(v) for v in vals):
            raise StatsError(f"group {self.group_name!r} contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)


GroupsLike = Sequence[Union[Sample, Sequence[float]]]


def _as_samples(groups: GroupsLike) -> list[Sample]:
    out = []
    for i, g in enumerate(groups):
        if isinstance(g, Sample):
            out.append(g)
        else:
            out.append(Sample(group_name=f"g{i + 1}", values=tuple(g)))
    return out


@dataclass(frozen=True)
class Descriptives:
    n: int
    median: float
    mean: float
    sd: Optional[float]  # None marks "undefined" for n = 1
    minimum: float
    maximum: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df1: float
    df2: float
    p_value: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_value <= 1.0):
            raise StatsError(f"p_value out of range: {self.p_value}")

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


@dataclass(frozen=True)
class PairwiseResult:
    pair: tuple[str, str]
    statistic: float  # studentized-range statistic q
    df: float
    p_value: float
    alpha: float = DEFAULT_ALPHA
    mean_difference: float = field(default=0.0)

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


def descriptives(sample: Union[Sample, Sequence[float]], *, sd_for_singleton: Optional[float] = None) -> Descriptives:
    """n, median, mean, sample sd (n-1), min, max.

    For n = 1 the sd is undefined; the default reports it as None rather than
    pretending zero spread. Pass sd_for_singleton=0.0 to get the lenient
    behaviour.
    """
    s = _as_samples([sample])[0]
    if s.n == 0:
        raise EmptySample()
    arr = np.asarray(s.values, dtype=float)
    sd = float(np.std(arr, ddof=1)) if s.n > 1 else sd_for_singleton
    return Descriptives(
        n=s.n,
        median=float(np.median(arr)),
        mean=float(arr.mean()),
        sd=sd,
        minimum=float(arr.min()),
        maximum=float(arr.max()),
    )


def _require_groups(groups: GroupsLike, min_size: int = 2) -> list[Sample]:
    samples = _as_samples(groups)
    if len(samples) < 2:
        raise InsufficientData(f"need >= 2 groups, got {len(samples)}")
    for s in samples:
        if s.n < min_size:
            raise InsufficientData(f"group {s.group_name!r} needs >= {min_size} values, has {s.n}")
    return samples


def levene(groups: GroupsLike, *, center: str = "mean", alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Levene's test for homogeneity of variance.

    Mean-centered by default (the classical statistic); center="median"
    selects the Brown-Forsythe variant. df1 = k-1, df2 = N-k.
    """
    if center not in ("mean", "median"):
        raise StatsError(f"unknown center {center!r}")
    samples = _require_groups(groups)
    k = len(samples)
    zs = []
    for s in samples:
        arr = np.asarray(s.values, dtype=float)
        c = float(arr.mean()) if center == "mean" else float(np.median(arr))
        zs.append(np.abs(arr - c))
    n_total = sum(len(z) for z in zs)
    grand = sum(float(z.sum()) for z in zs) / n_total
    between = sum(len(z) * (float(z.mean()) - grand) ** 2 for z in zs)
    within = sum(float(((z - z.mean()) ** 2).sum()) for z in zs)
    df1 = float(k - 1)
    df2 = float(n_total - k)
    if within == 0.0:
        # No spread of spreads at all: the statistic degenerates to 0/0 when
        # between is also zero (identical dispersion), otherwise to +inf.
        statistic = 0.0 if between == 0.0 else math.inf
        p = 1.0 if between == 0.0 else 0.0
        return TestResult(statistic=statistic, df1=df1, df2=df2, p_value=p, alpha=alpha)
    statistic = (df2 / df1) * between / within
    return TestResult(statistic=statistic, df1=df1, df2=df2, p_value=f_sf(statistic, df1, df2), alpha=alpha)


def welch_anova(groups: GroupsLike, *, alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Welch's heteroscedastic one-way ANOVA.

    Weights each group by n/s^2; df2 is the Welch-Satterthwaite estimate
    (real-valued). Requires nonzero variance in every group.
    """
    samples = _require_groups(groups)
    k = len(samples)
    ns = np.array([s.n for s in samples], dtype=float)
    means = np.array([np.mean(s.values) for s in samples])
    variances = np.array([np.var(s.values, ddof=1) for s in samples])
    for s, v in zip(samples, variances):
        if v == 0.0:
            raise ZeroVariance(s.group_name)
    w = ns / variances
    w_total = w.sum()
    grand = float((w * means).sum() / w_total)
    a = float((w * (means - grand) ** 2).sum()) / (k - 1)
    lam = float((((1.0 - w / w_total) ** 2) / (ns - 1.0)).sum())
    b = 1.0 + (2.0 * (k - 2.0) / (k * k - 1.0)) * lam
    statistic = a / b
    df1 = float(k - 1)
    df2 = (k * k - 1.0) / (3.0 * lam)
    return TestResult(statistic=statistic, df1=df1, df2=df2, p_value=f_sf(statistic, df1, df2), alpha=alpha)


def welch_ttest(x: Union[Sample, Sequence[float]], y: Union[Sample, Sequence[float]], *, alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Welch's two-sample t-test (two-sided). statistic is t; df1 is 1."""
    a, b = _require_groups([x, y])
    va = np.var(a.values, ddof=1)
    vb = np.var(b.values, ddof=1)
    if va == 0.0 and vb == 0.0:
        raise ZeroVariance(a.group_name if va == 0.0 else b.group_name)
    se2 = va / a.n + vb / b.n
    t = (float(np.mean(a.values)) - float(np.mean(b.values))) / math.sqrt(se2)
    df = se2 ** 2 / ((va / a.n) ** 2 / (a.n - 1) + (vb / b.n) ** 2 / (b.n - 1))
    p = 2.0 * t_sf(abs(t), df)
    return TestResult(statistic=t, df1=1.0, df2=df, p_value=min(1.0, p), alpha=alpha)


def games_howell(groups: GroupsLike, *, alpha: float = DEFAULT_ALPHA) -> list[PairwiseResult]:
    """Games-Howell pairwise comparisons for unequal variances.

    One result per unordered pair: q = sqrt(2)*|t_welch|, p from the
    studentized-range distribution with k groups and the pair's
    Welch-adjusted df.
    """
    samples = _require_groups(groups)
    k = len(samples)
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            a, b = samples[i], samples[j]
            va = float(np.var(a.values, ddof=1))
            vb = float(np.var(b.values, ddof=1))
            diff = float(np.mean(a.values)) - float(np.mean(b.values))
            se2 = va / a.n + vb / b.n
            if se2 == 0.0:
                q = 0.0 if diff == 0.0 else math.inf
                df = float(a.n + b.n - 2)
                p = 1.0 if diff == 0.0 else 0.0
            else:
                q = abs(diff) / math.sqrt(se2) * math.sqrt(2.0)
                df = se2 ** 2 / ((va / a.n) ** 2 / (a.n - 1) + (vb / b.n) ** 2 / (b.n - 1))
                p = studentized_range_sf(q, k, df)
            out.append(
                PairwiseResult(
                    pair=(a.group_name, b.group_name),
                    statistic=q,
                    df=df,
                    p_value=p,
                    alpha=alpha,
                    mean_difference=diff,
                )
            )
    return out
