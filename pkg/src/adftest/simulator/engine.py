"""Closed-loop scenario execution with the reference driving function."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import PlanningFailed
from ..geometry import RoadNetwork
from ..lanelet import LaneletMap, build_route_graph, to_lanelets
from ..openscenario import LanePosition, ScenarioConfig
from ..roadgen import ConcreteScenario
from . import kernels
from .control import speed_profile
from .params import AdfParams, VehicleParams
from .routing import Path, plan_route

COLUMNS = ("t", "x", "y", "heading", "v", "a_long", "a_lat", "steer", "s", "lane_dev")


class Status(str, enum.Enum):
    SUCCESS = "Success"
    OFF_ROAD = "OffRoad"
    TIMEOUT = "Timeout"
    STALLED = "Stalled"
    PLANNING_FAILED = "PlanningFailed"


_STATUS_CODES = {kernels.SUCCESS: Status.SUCCESS, kernels.OFF_ROAD: Status.OFF_ROAD,
                 kernels.TIMEOUT: Status.TIMEOUT, kernels.STALLED: Status.STALLED}


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    x: float
    y: float
    heading: float
    v: float
    a_long: float
    a_lat: float
    steer: float
    s: float
    lane_dev: float


class Trajectory:
    """Column store of samples; ``data`` has one row per sample in ``COLUMNS`` order."""

    def __init__(self, data: Optional[np.ndarray] = None):
        data = np.zeros((0, len(COLUMNS))) if data is None else np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(COLUMNS):
            raise ValueError(f"trajectory data must have shape (n, {len(COLUMNS)})")
        self.data = data

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, i) -> TrajectorySample:
        return TrajectorySample(*map(float, self.data[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]

    @classmethod
    def from_samples(cls, samples) -> Trajectory:
        return cls(np.array([[getattr(s, c) for c in COLUMNS] for s in samples], dtype=float).reshape(-1, len(COLUMNS)))

    def __eq__(self, other):
        return isinstance(other, Trajectory) and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class SimResult:
    status: Status
    trajectory: Trajectory
    attempts_used: int
    failure_detail: Optional[str] = None
    target: Optional[tuple[float, float]] = None

    @property
    def final_distance(self) -> Optional[float]:
        if self.target is None or len(self.trajectory) == 0:
            return None
        last = self.trajectory[-1]
        return math.hypot(last.x - self.target[0], last.y - self.target[1])


def _locate(net: RoadNetwork, lmap: LaneletMap, pos: LanePosition):
    if not net.has_road(pos.road):
        raise PlanningFailed(f"road {pos.road} not in the map")
    try:
        lanelet = lmap.find(pos.road, pos.lane)
    except KeyError as exc:
        raise PlanningFailed(str(exc)) from None
    return lanelet, net.road(pos.road).lane_center_point(pos.lane, pos.s)


def _station_on(path: Path, xy, lo: float, hi: float) -> float:
    """Station of the closest path point to ``xy`` restricted to [lo, hi]."""
    mask = (path.s >= lo - 1e-9) & (path.s <= hi + 1e-9)
    idx = np.flatnonzero(mask)
    d = (path.x[idx] - xy[0]) ** 2 + (path.y[idx] - xy[1]) ** 2
    hint = int(idx[np.argmin(d)])
    _, s, _, _ = kernels.project(path.x, path.y, xy[0], xy[1], path.s, hint, 1, 1)
    return float(min(max(s, lo), hi))


@dataclass(frozen=True)
class Plan:
    lanelets: tuple[int, ...]
    path: Path
    s_start: float
    s_target: float
    start_xy: tuple[float, float]
    target_xy: tuple[float, float]


def prepare(net: RoadNetwork, lmap: LaneletMap, cfg: ScenarioConfig) -> Plan:
    start_ll, start_xy = _locate(net, lmap, cfg.start)
    target_ll, target_xy = _locate(net, lmap, cfg.target)
    route = plan_route(build_route_graph(lmap), lmap, start_ll, target_ll)
    path = route.path
    s_start = _station_on(path, start_xy, path.breaks[0], path.breaks[1])
    s_target = _station_on(path, target_xy, path.breaks[-2], path.breaks[-1])
    if s_target <= s_start:
        raise PlanningFailed("target lies behind the start on the planned route")
    return Plan(route.lanelets, path, s_start, s_target, start_xy, target_xy)


def _attempt(plan: Plan, cfg: ScenarioConfig, vp: VehicleParams, adf: AdfParams, dt: float, gain: float):
    path = plan.path
    v_des = speed_profile(path, adf, vp, v0=cfg.initial_speed, s_start=plan.s_start, s_stop=plan.s_target)
    i_stop = int(np.searchsorted(path.s, plan.s_target, side="right"))
    aff = kernels.feed_forward(path.s, v_des, i_stop, min(adf.comfort_decel, -vp.a_min))
    i0 = int(np.clip(np.searchsorted(path.s, plan.s_start) - 1, 0, len(path.s) - 2))
    h0 = float(kernels.interp_at(path.s, np.unwrap(path.heading), plan.s_start, i0))
    n_max = int(round(cfg.timeout / dt)) + 1
    out = kernels.empty_outputs(n_max)
    n, code = kernels.run_loop(
        path.x, path.y, path.s, v_des, aff, path.half_width, plan.target_xy[0], plan.target_xy[1],
        plan.start_xy[0], plan.start_xy[1], math.remainder(h0, 2 * math.pi), float(cfg.initial_speed), i0, dt, n_max,
        vp.wheelbase, vp.width, vp.wheelbase + vp.front_overhang, vp.rear_overhang, vp.max_steer, vp.max_steer_rate, vp.a_min, vp.a_max, vp.jerk_bound,
        gain, adf.lookahead_min, adf.lookahead_max, adf.speed_gain, adf.speed_preview, min(adf.comfort_accel, vp.a_max),
        min(adf.comfort_jerk, vp.jerk_bound), adf.stop_speed_eps, adf.arrival_tol, adf.offroad_margin, *out)
    return _STATUS_CODES[code], Trajectory(np.column_stack([o[:n] for o in out]))


def _detail(status: Status, traj: Trajectory, attempt: int) -> str:
    last = traj[-1]
    where = f"at t={last.t:.2f} s, s={last.s:.1f} m"
    if status is Status.OFF_ROAD:
        return f"attempt {attempt}: left the lane (deviation {last.lane_dev:+.3f} m) {where}"
    if status is Status.TIMEOUT:
        return f"attempt {attempt}: timeout {where}"
    return f"attempt {attempt}: no progress for {kernels.STALL_WINDOW:g} s {where}"


def simulate(net: RoadNetwork, lmap: LaneletMap, cfg: ScenarioConfig, vp: Optional[VehicleParams] = None,
             adf: Optional[AdfParams] = None, dt: float = 0.01) -> SimResult:
    """Run the scenario on explicit maps, retrying failed runs up to ``cfg.attempt_limit`` times.

    Attempt ``k`` (counting from 0) scales the lookahead gain by ``1 + 0.1 k``.
    """
    vp = vp or VehicleParams()
    adf = adf or AdfParams()
    if not dt > 0:
        raise ValueError("dt must be positive")
    try:
        plan = prepare(net, lmap, cfg)
    except PlanningFailed as exc:
        return SimResult(Status.PLANNING_FAILED, Trajectory(), 0, str(exc))
    details = []
    for k in range(cfg.attempt_limit):
        status, traj = _attempt(plan, cfg, vp, adf, dt, adf.lookahead_gain * (1.0 + 0.1 * k))
        if status is Status.SUCCESS:
            last = traj[-1]
            assert math.hypot(last.x - plan.target_xy[0], last.y - plan.target_xy[1]) <= adf.arrival_tol
            assert last.v <= adf.stop_speed_eps
            return SimResult(status, traj, k + 1, "; ".join(details) or None, plan.target_xy)
        details.append(_detail(status, traj, k + 1))
    return SimResult(status, traj, cfg.attempt_limit, "; ".join(details), plan.target_xy)


def config_for(cs: ConcreteScenario, map_file: str = "map.xodr", initial_speed: float = 0.0,
               attempt_limit: int = 3, timeout: float = 180.0) -> ScenarioConfig:
    r = cs.route
    return ScenarioConfig(cs.id, map_file, LanePosition(r.start.road, r.start.lane, r.start.s), initial_speed,
                          LanePosition(r.target.road, r.target.lane, r.target.s), attempt_limit=attempt_limit,
                          timeout=timeout)


def run_simulation(cs: ConcreteScenario, cfg: Optional[ScenarioConfig] = None, vp: Optional[VehicleParams] = None,
                   adf: Optional[AdfParams] = None, dt: float = 0.01) -> SimResult:
    if not cs.ok:
        return SimResult(Status.PLANNING_FAILED, Trajectory(), 0, f"scenario not generated: {cs.error}")
    cfg = cfg or config_for(cs)
    return simulate(cs.network, to_lanelets(cs.network), cfg, vp, adf, dt)
