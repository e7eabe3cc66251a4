from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields


def _finite_positive(obj, names):
    for n in names:
        v = getattr(obj, n)
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{type(obj).__name__}.{n} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.7
    width: float = 1.8
    max_steer: float = 0.61
    max_steer_rate: float = 0.7
    a_min: float = -3.5
    a_max: float = 2.0
    jerk_bound: float = 5.0
    # bumper positions relative to the axles; the footprint drives the off-road test
    front_overhang: float = 0.9
    rear_overhang: float = 0.9

    def __post_init__(self):
        _finite_positive(self, ("wheelbase", "width", "max_steer", "max_steer_rate", "jerk_bound"))
        if self.front_overhang < 0 or self.rear_overhang < 0:
            raise ValueError("overhangs must be non-negative")
        if not (math.isfinite(self.a_min) and math.isfinite(self.a_max) and self.a_min < 0 < self.a_max):
            raise ValueError(f"need a_min < 0 < a_max, got [{self.a_min}, {self.a_max}]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AdfParams:
    """Tuning of the reference driving function.

    ``comfort_accel``, ``comfort_decel`` and ``comfort_jerk`` shape the speed
    profile and the longitudinal command; they stay inside the vehicle limits.
    ``speed_preview`` (s) is how far ahead the profile is read.
    """

    cruise_speed: float = 13.89
    lat_accel_limit: float = 2.5
    lookahead_gain: float = 0.8
    lookahead_min: float = 3.0
    lookahead_max: float = 15.0
    stop_speed_eps: float = 0.1
    arrival_tol: float = 2.0
    offroad_margin: float = 0.2
    speed_gain: float = 1.0
    speed_preview: float = 0.75
    comfort_accel: float = 1.0
    comfort_decel: float = 2.0
    comfort_jerk: float = 2.0

    def __post_init__(self):
        _finite_positive(self, [f.name for f in fields(self)])
        if self.lookahead_min > self.lookahead_max:
            raise ValueError("lookahead_min must not exceed lookahead_max")

    def to_dict(self) -> dict:
        return asdict(self)
