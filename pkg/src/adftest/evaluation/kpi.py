"""Normalized KPIs, comfort classes, template aggregates and radius analyses."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ..errors import InsufficientDataError, InvalidReferenceError
from ..roadgen import FAMILIES, Template
from .signals import bandpass, derive_signals, rms, sample_step

SCORE_FIELDS = ("long_accel", "long_decel", "lat_accel", "long_jerk", "lat_jerk", "distance_target",
                "lane_keeping", "oscillation")
DYNAMIC_FIELDS = SCORE_FIELDS[:5]

COMFORT_LABELS = ("not uncomfortable", "a little uncomfortable", "fairly uncomfortable", "uncomfortable",
                  "very uncomfortable", "extremely uncomfortable")
# lower edges of each band; where the published bands overlap the worse label wins
COMFORT_EDGES = (0.315, 0.5, 0.8, 1.25, 2.0)


@dataclass(frozen=True)
class KpiRefs:
    a_long_ref: float = 2.0
    a_decel_ref: float = 3.5
    a_lat_ref: float = 3.0
    jerk_long_ref: float = 5.0
    jerk_lat_ref: float = 5.0
    d_target_ref: float = 5.0
    # None: half the scenario's lane width
    lane_dev_ref: Optional[float] = None
    osc_rms_ref: float = 0.315

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None and f.name == "lane_dev_ref":
                continue
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidReferenceError(f"{f.name} must be > 0, got {v!r}")


@dataclass(frozen=True)
class KpiVector:
    long_accel: float
    long_decel: float
    lat_accel: float
    long_jerk: float
    lat_jerk: float
    distance_target: float
    lane_keeping: float
    oscillation: float
    comfort_rms: float
    comfort_class: str

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in SCORE_FIELDS)

    @property
    def dynamic_mean(self) -> float:
        return float(np.mean([getattr(self, f) for f in DYNAMIC_FIELDS]))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> KpiVector:
        return cls(**{f.name: data[f.name] for f in fields(cls)})


def normalize_kpi(peak: float, ref: float) -> float:
    if not ref > 0:
        raise InvalidReferenceError(f"reference must be > 0, got {ref!r}")
    if peak < 0:
        raise ValueError(f"peak must be >= 0, got {peak!r}")
    return min(max(1.0 - peak / ref, 0.0), 1.0)


def comfort_class(value: float) -> str:
    if not value >= 0:
        raise ValueError(f"rms must be >= 0, got {value!r}")
    return COMFORT_LABELS[int(np.searchsorted(COMFORT_EDGES, value, side="right"))]


def comfort_rms(traj, dt: Optional[float] = None) -> float:
    dt = sample_step(traj.column("t")) if dt is None else dt
    filtered = bandpass(traj.column("a_long"), 1.0 / dt)
    return rms(filtered, dt)


def compute_kpis(traj, refs: KpiRefs, target_point, lane_width: float, dt: Optional[float] = None) -> KpiVector:
    sig = derive_signals(traj, dt)
    dt = float(sig.t[1] - sig.t[0]) if dt is None else dt
    a = sig.a_long
    peaks = {
        "long_accel": float(max(a.max(), 0.0)),
        "long_decel": float(max(-a.min(), 0.0)),
        "lat_accel": float(np.abs(sig.a_lat).max()),
        "long_jerk": float(np.abs(sig.j_long).max()),
        "lat_jerk": float(np.abs(sig.j_lat).max()),
    }
    x, y = traj.column("x")[-1], traj.column("y")[-1]
    d_final = math.hypot(x - target_point[0], y - target_point[1])
    lane_ref = refs.lane_dev_ref if refs.lane_dev_ref is not None else 0.5 * lane_width
    c_rms = comfort_rms(traj, dt)
    return KpiVector(
        long_accel=normalize_kpi(peaks["long_accel"], refs.a_long_ref),
        long_decel=normalize_kpi(peaks["long_decel"], refs.a_decel_ref),
        lat_accel=normalize_kpi(peaks["lat_accel"], refs.a_lat_ref),
        long_jerk=normalize_kpi(peaks["long_jerk"], refs.jerk_long_ref),
        lat_jerk=normalize_kpi(peaks["lat_jerk"], refs.jerk_lat_ref),
        distance_target=normalize_kpi(d_final, refs.d_target_ref),
        lane_keeping=normalize_kpi(float(np.abs(traj.column("lane_dev")).max()), lane_ref),
        oscillation=normalize_kpi(c_rms, refs.osc_rms_ref),
        comfort_rms=c_rms,
        comfort_class=comfort_class(c_rms),
    )


# ------------------------------------------------------------------ aggregation

@dataclass(frozen=True)
class TemplateAggregate:
    template: str
    count: int
    successes: int
    success_rate: float
    means: Optional[dict]
    mean_comfort_rms: Optional[float]

    def axis_values(self) -> list[Optional[float]]:
        return [None if self.means is None else self.means[f] for f in SCORE_FIELDS]

    def to_dict(self) -> dict:
        return asdict(self)


def _family(template) -> str:
    return Template(template).family


def aggregate_by_template(results: Iterable[tuple]) -> list[TemplateAggregate]:
    """``results`` holds (template, succeeded, KpiVector | None) triples.

    ``template`` may be a Template, its value, or an object with a ``template``
    attribute (such as a ConcreteScenario); ``succeeded`` may be a bool or an
    object with a ``status`` attribute.
    """
    groups: dict[str, list] = {}
    for tpl, outcome, kpi in results:
        tpl = getattr(tpl, "template", tpl)
        ok = outcome if isinstance(outcome, bool) else getattr(outcome, "status", None) == "Success"
        groups.setdefault(_family(tpl), []).append((ok, kpi))
    out = []
    for family in FAMILIES:
        if family not in groups:
            continue
        rows = groups[family]
        good = [k for ok, k in rows if ok and k is not None]
        means = None
        mean_rms = None
        if good:
            # sorted before summing so the means do not depend on input order
            means = {f: float(math.fsum(sorted(getattr(k, f) for k in good)) / len(good)) for f in SCORE_FIELDS}
            mean_rms = float(math.fsum(sorted(k.comfort_rms for k in good)) / len(good))
        successes = sum(1 for ok, _ in rows if ok)
        out.append(TemplateAggregate(family, len(rows), successes, successes / len(rows), means, mean_rms))
    return out


# ------------------------------------------------------------------ radius analyses

@dataclass(frozen=True)
class CriticalRadius:
    lane_width: float
    critical: Optional[float]
    min_success: Optional[float]
    monotone: bool
    # (largest failing, smallest succeeding above it) when the pattern is not monotone
    boundary: Optional[tuple[float, float]] = None

    def to_dict(self) -> dict:
        return asdict(self)


def critical_radius(sweep: Sequence[tuple[float, float, object]]) -> list[CriticalRadius]:
    """Per lane width, the largest failing radius above which every run succeeded."""
    by_width: dict[float, list] = {}
    for radius, width, status in sweep:
        ok = (status == "Success") if isinstance(status, str) else bool(status)
        by_width.setdefault(float(width), []).append((float(radius), ok))
    out = []
    for width in sorted(by_width):
        rows = sorted(by_width[width])
        fails = [r for r, ok in rows if not ok]
        succ = [r for r, ok in rows if ok]
        if not fails:
            out.append(CriticalRadius(width, None, succ[0] if succ else None, True))
            continue
        top_fail = fails[-1]
        above = [r for r in succ if r > top_fail]
        monotone = all(r > top_fail for r in succ) or not succ
        # a failure sandwiched between successes makes the boundary ambiguous
        if monotone:
            out.append(CriticalRadius(width, top_fail, above[0] if above else None, True))
        else:
            low_succ = min(succ)
            out.append(CriticalRadius(width, top_fail, above[0] if above else None, False, (top_fail, low_succ)))
    return out


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    rx, ry = rankdata(x), rankdata(y)
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return 0.0
    return float(np.corrcoef(rx, ry)[0, 1])


def kpi_radius_trend(points: Sequence[tuple[float, KpiVector]], min_points: int = 5) -> float:
    """Spearman rank correlation of radius against the mean dynamic KPI."""
    if len(points) < min_points:
        raise InsufficientDataError(f"need at least {min_points} successful points, got {len(points)}")
    radii = [float(r) for r, _ in points]
    values = [k.dynamic_mean for _, k in points]
    return spearman(radii, values)
