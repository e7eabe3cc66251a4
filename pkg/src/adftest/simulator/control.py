"""Python-facing wrappers of the controller and vehicle kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .params import AdfParams, VehicleParams
from .routing import Path


@dataclass(frozen=True)
class VehicleState:
    t: float = 0.0
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v: float = 0.0
    a: float = 0.0
    steer: float = 0.0

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("speed must be non-negative")


def curve_speed_limit(curvature: np.ndarray, adf: AdfParams) -> np.ndarray:
    k = np.abs(np.asarray(curvature, dtype=float))
    with np.errstate(divide="ignore", over="ignore"):
        v = np.sqrt(adf.lat_accel_limit / k)
    return np.minimum(adf.cruise_speed, v)


def speed_profile(path: Path, adf: AdfParams, vp: Optional[VehicleParams] = None, v0: Optional[float] = None,
                  s_start: Optional[float] = None, s_stop: Optional[float] = None) -> np.ndarray:
    """Desired speed at every path point.

    Curve limit ``min(cruise, sqrt(lat_limit/|k|))``, then a backward pass to
    zero speed at ``s_stop`` (path end by default) at ``comfort_decel`` and a
    forward pass from ``v0`` at ``s_start`` at ``comfort_accel``. Without ``v0``
    the start is left unconstrained.
    """
    vp = vp or VehicleParams()
    s = path.s
    s_stop = path.length if s_stop is None else s_stop
    s_start = float(s[0]) if s_start is None else s_start
    decel = min(adf.comfort_decel, -vp.a_min)
    accel = min(adf.comfort_accel, vp.a_max)
    i_stop = int(np.searchsorted(s, s_stop, side="right"))
    i_start = int(np.clip(np.searchsorted(s, s_start, side="right") - 1, 0, len(s) - 1))
    v_start = np.inf if v0 is None else float(v0)
    return kernels.profile_passes(s, curve_speed_limit(path.curvature, adf), i_start, v_start, i_stop,
                                  float(s_stop), decel, accel)


def pure_pursuit_steer(state: VehicleState, path: Path, adf: AdfParams, vp: VehicleParams,
                       lookahead_gain: Optional[float] = None) -> float:
    gain = adf.lookahead_gain if lookahead_gain is None else lookahead_gain
    i, s_proj, _, _ = kernels.project(path.x, path.y, state.x, state.y, path.s, 0, 0, len(path.s))
    return float(kernels.pursuit_steer(state.x, state.y, state.heading, state.v, path.x, path.y, path.s, s_proj, i,
                                       gain, adf.lookahead_min, adf.lookahead_max, vp.wheelbase, vp.max_steer))


def pursuit_law(alpha: float, lookahead: float, wheelbase: float) -> float:
    return math.atan(2.0 * wheelbase * math.sin(alpha) / lookahead)


def step_vehicle(state: VehicleState, steer_cmd: float, accel_cmd: float, dt: float, vp: VehicleParams) -> VehicleState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    steer, a = kernels.actuate(state.steer, state.a, steer_cmd, accel_cmd, dt, vp.max_steer, vp.max_steer_rate,
                               vp.a_min, vp.a_max, vp.jerk_bound)
    x, y, h, v = kernels.bicycle_rk4(state.x, state.y, state.heading, state.v, steer, a, dt, vp.wheelbase)
    return replace(state, t=state.t + dt, x=x, y=y, heading=h, v=v, a=a, steer=steer)
