"""Logical-error-rate estimators and bootstrap summaries.

Curves are LER estimates on a shared sweep grid. Bootstrap routines resample
each point's failure count as ``Binomial(N, k/N)`` and are deterministic given
their seed. Quantiles use the nearest-rank rule. Undefined results are NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Z95 = 1.9599639845
QUANTILES = (0.05, 0.5, 0.95)


@dataclass(frozen=True)
class PointEstimate:
    trials: int
    failures: int
    ler: float
    ci_low: float
    ci_high: float


def wilson_ci(k: int, n: int, z: float = Z95) -> PointEstimate:
    if n < 1:
        raise ValueError(f"need at least one trial, got N={n}")
    if not 0 <= k <= n:
        raise ValueError(f"failures must lie in [0, N], got k={k}, N={n}")
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = (z / den) * math.sqrt((p * (1 - p) + z * z / (4 * n)) / n)
    low = max(0.0, centre - half)
    high = min(1.0, centre + half)
    # guard the bracket against last-ulp rounding at k = 0 or k = N
    return PointEstimate(n, k, p, min(low, p), max(high, p))


@dataclass(frozen=True)
class Curve:
    """Failure counts on a sorted sweep grid."""

    x: np.ndarray
    trials: np.ndarray
    failures: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        trials = np.broadcast_to(np.asarray(self.trials, dtype=np.int64), x.shape).copy()
        failures = np.asarray(self.failures, dtype=np.int64)
        if failures.shape != x.shape:
            raise ValueError("failures and grid differ in length")
        if np.any(trials < 1) or np.any(failures < 0) or np.any(failures > trials):
            raise ValueError("each point needs 0 <= failures <= trials and trials >= 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "failures", failures)

    @classmethod
    def from_estimates(cls, x: Sequence[float], points: Sequence[PointEstimate]) -> Curve:
        return cls(x, [p.trials for p in points], [p.failures for p in points])

    @property
    def ler(self) -> np.ndarray:
        return self.failures / self.trials

    def __len__(self) -> int:
        return len(self.x)

    def resample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` bootstrap LER curves, shape ``(size, len(self))``."""
        k = rng.binomial(self.trials, self.ler, size=(size, len(self)))
        return k / self.trials


def _require_shared_grid(*curves: Curve) -> None:
    first = curves[0].x
    for c in curves[1:]:
        if c.x.shape != first.shape or not np.array_equal(c.x, first):
            raise ValueError("curves are not on an identical sweep grid")


def nearest_rank(values, q: float) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return math.nan
    idx = min(max(math.ceil(q * v.size) - 1, 0), v.size - 1)
    return float(v[idx])


def crossing(curve1, curve2) -> float:
    """Lowest-x crossing of two ``(x, ler)`` curves by linear interpolation, else NaN.

    A point where the difference is exactly zero counts as a crossing at that
    point, unless the difference is also zero at the next point.
    """
    c1 = np.asarray(curve1, dtype=float)
    c2 = np.asarray(curve2, dtype=float)
    if c1.ndim != 2 or c1.shape != c2.shape or c1.shape[1] != 2:
        raise ValueError("curves must be equal-length sequences of (x, ler) pairs")
    if len(c1) < 2:
        raise ValueError("need at least two grid points")
    if not np.array_equal(c1[:, 0], c2[:, 0]):
        raise ValueError("curves are not on an identical sweep grid")
    return _crossing(c1[:, 0], c1[:, 1] - c2[:, 1])


def _crossing(x: np.ndarray, delta: np.ndarray) -> float:
    for k in range(len(x) - 1):
        a, b = delta[k], delta[k + 1]
        if a == 0 and b == 0:
            continue
        if a * b <= 0:
            return float(x[k] + (x[k + 1] - x[k]) * a / (a - b))
    return math.nan


@dataclass(frozen=True)
class CrossingSummary:
    decoder: str
    pair: tuple[int, int]
    median: float
    q05: float
    q95: float
    valid_count: int
    total_resamples: int


def bootstrap_crossings(
    small: Curve,
    large: Curve,
    resamples: int,
    seed: int,
    decoder: str = "",
    pair: tuple[int, int] = (0, 0),
) -> CrossingSummary:
    if resamples < 1:
        raise ValueError("need at least one resample")
    _require_shared_grid(small, large)
    rng = np.random.default_rng(seed)
    a = small.resample(rng, resamples)
    b = large.resample(rng, resamples)
    found = np.array([_crossing(small.x, a[r] - b[r]) for r in range(resamples)])
    valid = found[~np.isnan(found)]
    return CrossingSummary(
        decoder=decoder,
        pair=tuple(pair),
        median=nearest_rank(valid, 0.5),
        q05=nearest_rank(valid, 0.05),
        q95=nearest_rank(valid, 0.95),
        valid_count=int(valid.size),
        total_resamples=int(resamples),
    )


@dataclass(frozen=True)
class EffectSize:
    pair: tuple[str, str]
    mean_delta: float
    ci_low: float
    ci_high: float


def effect_size(
    a: Curve, b: Curve, resamples: int, seed: int, names: tuple[str, str] = ("a", "b")
) -> EffectSize:
    """Mean pointwise LER difference ``a - b`` with a 95% bootstrap interval.

    The interval is widened to contain the point estimate if the percentile
    bounds happen to exclude it.
    """
    if len(a) == 0:
        raise ValueError("empty sweep grid")
    _require_shared_grid(a, b)
    mean_delta = float(np.mean(a.ler - b.ler))
    rng = np.random.default_rng(seed)
    boot = np.mean(a.resample(rng, resamples) - b.resample(rng, resamples), axis=1)
    low = min(nearest_rank(boot, 0.025), mean_delta)
    high = max(nearest_rank(boot, 0.975), mean_delta)
    return EffectSize(tuple(names), mean_delta, low, high)


@dataclass(frozen=True)
class RankBand:
    decoder: str
    x: float
    rank: int
    q05: float
    q50: float
    q95: float


def _ranks(lers: np.ndarray) -> np.ndarray:
    """Ranks (1 = lowest LER) along the last axis; ties keep column order."""
    order = np.argsort(lers, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, lers.shape[-1] + 1)[None, :].repeat(len(order), 0), axis=-1)
    return ranks


def rank_stability(curves: dict[str, Curve], resamples: int, seed: int) -> list[RankBand]:
    """Bootstrap rank quantiles per decoder per grid point.

    Decoders are processed in name order, which also breaks LER ties.
    """
    if len(curves) < 2:
        raise ValueError("rank stability needs at least two decoders")
    names = sorted(curves)
    _require_shared_grid(*(curves[n] for n in names))
    rng = np.random.default_rng(seed)
    boot = np.stack([curves[n].resample(rng, resamples) for n in names], axis=-1)  # (R, M, K)
    x = curves[names[0]].x
    point = _ranks(np.stack([curves[n].ler for n in names], axis=-1))
    bands = []
    for j in range(len(x)):
        ranks = _ranks(boot[:, j, :])
        for i, name in enumerate(names):
            col = ranks[:, i]
            bands.append(
                RankBand(
                    decoder=name,
                    x=float(x[j]),
                    rank=int(point[j, i]),
                    q05=nearest_rank(col, 0.05),
                    q50=nearest_rank(col, 0.5),
                    q95=nearest_rank(col, 0.95),
                )
            )
    return bands


def distance_gain(small: Curve, large: Curve) -> np.ndarray:
    """Pointwise ``LER(small d) / LER(large d)``; NaN where the denominator is zero."""
    _require_shared_grid(small, large)
    num, den = small.ler, large.ler
    out = np.full(len(small), math.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def ablation_slope(levels, lers) -> float:
    """Least-squares slope of LER against noise level (0 for a flat response)."""
    x = np.asarray(levels, dtype=float)
    y = np.asarray(lers, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (level, LER) pairs")
    if np.all(y == y[0]):
        return 0.0
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("all ablation levels are identical")
    return float(xc @ (y - y.mean())) / sxx


@dataclass(frozen=True)
class FidelityDelta:
    deltas: np.ndarray = field(repr=False)
    mean: float
    max: float
    correlation: float


def fidelity_delta(serial, parallel) -> FidelityDelta:
    s = np.asarray(serial, dtype=float)
    p = np.asarray(parallel, dtype=float)
    if s.shape != p.shape or s.size == 0:
        raise ValueError("serial and parallel LERs must share a non-empty grid")
    deltas = np.abs(s - p)
    if np.ptp(s) == 0 or np.ptp(p) == 0:
        corr = math.nan
    else:
        corr = float(np.corrcoef(s, p)[0, 1])
    return FidelityDelta(deltas, float(deltas.mean()), float(deltas.max()), corr)


def throughput(total_trials: int, runtime_s: float) -> float:
    return total_trials / runtime_s if runtime_s > 0 else math.nan


def speedup(t_serial: float, t_parallel: float) -> float:
    return t_serial / t_parallel if t_parallel > 0 else math.nan
