"""In-memory curve-radius sweeps for critical-radius and KPI-trend analysis."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..evaluation import KpiVector, compute_kpis, critical_radius, kpi_radius_trend
from ..evaluation.kpi import CriticalRadius
from ..errors import InsufficientDataError
from ..roadgen import DEFAULT_ROUTES, Template, concrete_from_params
from ..simulator import config_for, run_simulation
from .config import ToolkitConfig

# each downward extension step multiplies the smallest radius by this factor
SHRINK = 0.6


@dataclass(frozen=True)
class SweepPoint:
    radius: float
    lane_width: float
    status: str
    kpi: Optional[KpiVector]


@dataclass(frozen=True)
class SweepResult:
    template: str
    points: tuple[SweepPoint, ...]
    extended: tuple[float, ...]

    def critical(self) -> list[CriticalRadius]:
        return critical_radius([(p.radius, p.lane_width, p.status) for p in self.points])

    def trend(self, lane_width: float) -> Optional[float]:
        pts = sorted((p.radius, p.kpi) for p in self.points
                     if p.lane_width == lane_width and p.status == "Success" and p.kpi is not None)
        try:
            return kpi_radius_trend(pts)
        except InsufficientDataError:
            return None


def _run_point(template: Template, width: float, radius: float, cfg: ToolkitConfig) -> Optional[SweepPoint]:
    cs = concrete_from_params(f"sweep-{width}-{radius}", "sweep", template,
                              {"lane_width": width, "radius": radius}, DEFAULT_ROUTES[template])
    if not cs.ok:
        return None
    scen = config_for(cs, initial_speed=cfg.initial_speed, attempt_limit=cfg.attempt_limit, timeout=cfg.timeout)
    res = run_simulation(cs, scen, cfg.vehicle, cfg.adf, cfg.dt)
    kpi = None
    if res.status.value == "Success":
        kpi = compute_kpis(res.trajectory, cfg.refs, res.target, width, cfg.dt)
    return SweepPoint(radius, width, res.status.value, kpi)


def radius_sweep(template: Template, widths: Sequence[float], radii: Sequence[float],
                 cfg: Optional[ToolkitConfig] = None, max_extensions: int = 8) -> SweepResult:
    """Simulate every constructible (width, radius) pair.

    When no width fails anywhere, smaller radii are appended until a failure
    turns up or no width admits a smaller curve.
    """
    cfg = cfg or ToolkitConfig()
    template = Template(template)
    points = [p for w in widths for r in sorted(radii) if (p := _run_point(template, w, r, cfg)) is not None]
    extended = []
    r = min(radii)
    for _ in range(max_extensions):
        if any(p.status != "Success" for p in points):
            break
        r *= SHRINK
        new = [p for w in widths if (p := _run_point(template, w, r, cfg)) is not None]
        if not new:
            break
        extended.append(r)
        points += new
    return SweepResult(template.value, tuple(sorted(points, key=lambda p: (p.lane_width, p.radius))), tuple(extended))
