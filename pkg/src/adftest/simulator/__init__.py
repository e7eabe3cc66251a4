from .control import VehicleState, curve_speed_limit, pure_pursuit_steer, pursuit_law, speed_profile, step_vehicle
from .csvio import export_csv, parse_csv
from .engine import (
    COLUMNS,
    SimResult,
    Status,
    Trajectory,
    TrajectorySample,
    config_for,
    prepare,
    run_simulation,
    simulate,
)
from .params import AdfParams, VehicleParams
from .routing import Path, PlannedRoute, build_path, plan_route, shortest_lanelet_path

__all__ = [
    "AdfParams", "COLUMNS", "Path", "PlannedRoute", "SimResult", "Status", "Trajectory", "TrajectorySample",
    "VehicleParams", "VehicleState", "build_path", "config_for", "curve_speed_limit", "export_csv", "parse_csv",
    "plan_route", "prepare", "pure_pursuit_steer", "pursuit_law", "run_simulation", "shortest_lanelet_path",
    "simulate", "speed_profile", "step_vehicle",
]
