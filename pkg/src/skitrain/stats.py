"""Correlation, significance, regression bands and per-level summaries.

The p-value machinery (regularized incomplete beta via continued fractions,
Student-t tail and quantile) is implemented here to double precision so the
values are checkable against independent references. Significance assumes
independent samples; resampled motion series are autocorrelated, so the
report carries a caveat rather than a correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .angles import ANGLE_FIELDS, AngleSeries
from .errors import InsufficientData, InvalidInput, ZeroVariance
from .motion import UniformSeries

POSE_CHANNELS = ("x", "y", "z", "eulerX", "eulerY", "eulerZ")

_BETA_EPS = 1e-15
_BETA_ITMAX = 400


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_ITMAX + 1):
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
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise InvalidInput("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise InvalidInput("beta parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise InvalidInput("x outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-sided p-value of a Student-t statistic."""
    if df < 1:
        raise InsufficientData("needs at least 1 degree of freedom")
    if math.isinf(t):
        return 0.0
    return betainc(0.5 * df, 0.5, df / (df + t * t))


def student_t_ppf(q: float, df: int) -> float:
    """Upper quantile of Student-t (q in [0.5, 1)), by bisection."""
    if not (0.5 <= q < 1.0):
        raise InvalidInput("quantile must be in [0.5, 1)")
    if q == 0.5:
        return 0.0
    target = 2.0 * (1.0 - q)  # two-sided tail mass at the sought t
    lo, hi = 0.0, 1.0
    while student_t_two_sided_p(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            raise InvalidInput("t quantile out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_two_sided_p(mid, df) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _clean_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInput("pearson needs two equal-length 1-d series")
    m = np.isfinite(x) & np.isfinite(y)
    return x[m], y[m]


def pearson(x, y) -> tuple[float, float, int]:
    """Pearson r with a two-sided Student-t p-value; returns (r, p, n).

    Pairs where either value is missing (NaN) are dropped first.
    """
    x, y = _clean_pairs(x, y)
    n = len(x)
    if n < 3:
        raise InsufficientData(f"need >= 3 paired samples, got {n}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(xd @ xd))
    sy = math.sqrt(float(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("constant series has no defined correlation")
    r = float(xd @ yd) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        # with t = r*sqrt(df/(1-r^2)), df/(df+t^2) reduces to 1-r^2
        p = betainc(0.5 * df, 0.5, 1.0 - r * r)
    return r, p, n


CATEGORIES = ("negligible", "low", "moderate", "high", "very high")
_CATEGORY_EDGES = (0.3, 0.5, 0.7, 0.9)


def classify_correlation(abs_r: float) -> str:
    """Conventional correlation-strength buckets; boundaries round up."""
    if not (0.0 <= abs_r <= 1.0) or not math.isfinite(abs_r):
        raise InvalidInput(f"|r| must be in [0, 1], got {abs_r}")
    for edge, name in zip(_CATEGORY_EDGES, CATEGORIES):
        if abs_r < edge:
            return name
    return CATEGORIES[-1]


@dataclass(frozen=True)
class CorrelationCell:
    pose_channel: str
    angle_name: str
    r: float
    abs_r: float
    n: int
    p: float
    category: str


def _aligned_columns(head: UniformSeries, angles: AngleSeries) -> tuple[np.ndarray, dict]:
    if abs(head.rate - angles.rate) > 1e-9:
        raise InvalidInput("head and angle series must share one clock rate")
    offset = (angles.start - head.start) * head.rate
    k = int(round(offset))
    if abs(offset - k) > 1e-6:
        raise InvalidInput("head and angle series clocks are not aligned")
    h = np.asarray(head.values, float)
    if h.ndim != 2 or h.shape[1] != 6:
        raise InvalidInput("head series must have six channels")
    if k >= 0:
        h = h[k:]
        a = {f: v for f, v in angles.columns.items()}
    else:
        h = h
        a = {f: v[-k:] for f, v in angles.columns.items()}
    n = min(len(h), min(len(v) for v in a.values()))
    return h[:n], {f: v[:n] for f, v in a.items()}


_DEGENERATE_RANGE = 1e-9  # meters / radians; below this a series is constant


def _degenerate(col: np.ndarray) -> bool:
    finite = col[np.isfinite(col)]
    if len(finite) == 0:
        return True
    return float(np.max(finite) - np.min(finite)) <= _DEGENERATE_RANGE


def correlation_matrix(head: UniformSeries, angles: AngleSeries,
                       ) -> dict[tuple[str, str], Optional[CorrelationCell]]:
    """6x9 grid of head-channel vs body-angle correlations.

    Gaps are dropped per pair. Degenerate pairs come back as None rather
    than fabricated zeros; a series whose total variation is below a
    nanometer/nanoradian carries only float noise and counts as constant.
    """
    h, a = _aligned_columns(head, angles)
    out: dict[tuple[str, str], Optional[CorrelationCell]] = {}
    for ci, channel in enumerate(POSE_CHANNELS):
        for field in ANGLE_FIELDS:
            if _degenerate(h[:, ci]) or _degenerate(a[field]):
                out[(channel, field)] = None
                continue
            try:
                r, p, n = pearson(h[:, ci], a[field])
            except (ZeroVariance, InsufficientData):
                out[(channel, field)] = None
                continue
            out[(channel, field)] = CorrelationCell(
                pose_channel=channel, angle_name=field, r=r, abs_r=abs(r),
                n=n, p=p, category=classify_correlation(abs(r)))
    return out


@dataclass(frozen=True)
class RegressionBand:
    """OLS fit with a symmetric prediction interval at the given level."""

    slope: float
    intercept: float
    residual_std: float
    x_mean: float
    sxx: float
    n: int
    level: float
    t_crit: float

    def predict(self, x: float) -> tuple[float, float, float]:
        y = self.slope * x + self.intercept
        half = self.t_crit * self.residual_std * math.sqrt(
            1.0 + 1.0 / self.n + (x - self.x_mean) ** 2 / self.sxx)
        return y, y - half, y + half


def fit_prediction_interval(x, y, level: float = 0.95) -> RegressionBand:
    """Least-squares line plus prediction bounds for a single new observation."""
    x, y = _clean_pairs(x, y)
    n = len(x)
    if n < 3:
        raise InsufficientData(f"need >= 3 points, got {n}")
    if not (0.0 < level < 1.0):
        raise InvalidInput("confidence level must be in (0, 1)")
    xm = float(x.mean())
    xd = x - xm
    sxx = float(xd @ xd)
    if sxx == 0.0:
        raise ZeroVariance("x has no variance")
    slope = float(xd @ (y - y.mean())) / sxx
    intercept = float(y.mean()) - slope * xm
    resid = y - (slope * x + intercept)
    s2 = float(resid @ resid) / (n - 2)
    t_crit = student_t_ppf(0.5 + level / 2.0, n - 2)
    return RegressionBand(slope=slope, intercept=intercept, residual_std=math.sqrt(s2),
                          x_mean=xm, sxx=sxx, n=n, level=level, t_crit=t_crit)


# ---------------------------------------------------------------------------
# Per-level movement and head-distance summaries


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class LevelSummary:
    levels: tuple[int, ...]
    # level -> angle field -> Aggregate of per-run max |movement| in degrees
    angle_stats: dict[int, dict[str, Optional[Aggregate]]]
    # (level, avatar) -> Aggregate of head path length in meters
    head_stats: dict[tuple[int, bool], Optional[Aggregate]]
    # level -> (mean, std) percentage-point change of the max angles vs the
    # first level (population std across the nine angles, as a spread over
    # angles rather than a sample estimate)
    deviation_pp: dict[int, Optional[tuple[float, float]]]


def _aggregate(values: Sequence[float]) -> Optional[Aggregate]:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return None
    n = len(vals)
    mean = sum(vals) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1)) if n > 1 else 0.0
    return Aggregate(mean=mean, std=std, n=n)


def max_abs_movement_deg(series: AngleSeries) -> dict[str, Optional[float]]:
    """Per angle, the run's maximum absolute movement, in degrees."""
    out = {}
    for f in ANGLE_FIELDS:
        col = series.columns[f]
        finite = col[np.isfinite(col)]
        out[f] = math.degrees(float(np.max(np.abs(finite)))) if len(finite) else None
    return out


def level_summary(runs: Sequence[tuple]) -> LevelSummary:
    """Aggregate per-run maxima and head distances per level.

    runs holds (run_log, angle_series, level_id, avatar) tuples. Aggregates
    are mean +/- sample std over runs; a single run reports std 0.
    """
    if not runs:
        raise InsufficientData("no runs to summarize")
    levels = sorted({lvl for _, _, lvl, _ in runs})
    per_run_max: dict[int, list[dict[str, Optional[float]]]] = {lvl: [] for lvl in levels}
    head: dict[tuple[int, bool], list[float]] = {}
    for run_log, series, lvl, avatar in runs:
        per_run_max[lvl].append(max_abs_movement_deg(series))
        head.setdefault((lvl, bool(avatar)), []).append(run_log.outcome.head_path_length)

    angle_stats: dict[int, dict[str, Optional[Aggregate]]] = {}
    for lvl in levels:
        angle_stats[lvl] = {
            f: _aggregate([m[f] for m in per_run_max[lvl]]) for f in ANGLE_FIELDS
        }

    head_stats = {
        key: _aggregate(vals) for key, vals in sorted(head.items())
    }

    base = levels[0]
    deviation_pp: dict[int, Optional[tuple[float, float]]] = {base: None}
    for lvl in levels[1:]:
        pcts = []
        for f in ANGLE_FIELDS:
            a = angle_stats[base][f]
            b = angle_stats[lvl][f]
            if a is None or b is None or a.mean == 0.0:
                continue
            pcts.append((b.mean - a.mean) / a.mean * 100.0)
        if not pcts:
            deviation_pp[lvl] = None
            continue
        mean = sum(pcts) / len(pcts)
        std = math.sqrt(sum((p - mean) ** 2 for p in pcts) / len(pcts))
        deviation_pp[lvl] = (mean, std)

    return LevelSummary(levels=tuple(levels), angle_stats=angle_stats,
                        head_stats=head_stats, deviation_pp=deviation_pp)
