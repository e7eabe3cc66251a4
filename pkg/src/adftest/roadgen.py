"""Road-network templates and expansion of logical scenarios into concrete ones."""
from __future__ import annotations

import enum
import itertools
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .errors import AdfTestError, DegenerateGeometryError, FormatError, GeometryError, InvalidCountError, RouteError
from .geometry import (
    Connection,
    GeomSegment,
    Junction,
    Link,
    Pose2D,
    Road,
    RoadNetwork,
    check_lane_offset,
    normalize_angle,
    segment_end_pose,
    validate_network,
)

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib


class Template(str, enum.Enum):
    CURVED_LEFT = "CurvedLeft"
    CURVED_RIGHT = "CurvedRight"
    TJUNCTION_LEFT = "TJunctionLeft"
    TJUNCTION_RIGHT = "TJunctionRight"
    COMPLEX = "Complex"

    @property
    def family(self) -> str:
        if self in (Template.CURVED_LEFT, Template.CURVED_RIGHT):
            return "curved"
        if self in (Template.TJUNCTION_LEFT, Template.TJUNCTION_RIGHT):
            return "t-junction"
        return "complex"


FAMILIES = ("curved", "t-junction", "complex")

DEFAULT_PARAMS: dict[Template, dict[str, float]] = {
    Template.CURVED_LEFT: {"lane_width": 3.5, "radius": 150.0, "entry_len": 50.0, "exit_len": 50.0, "arc_angle": 90.0},
    Template.CURVED_RIGHT: {"lane_width": 3.5, "radius": 150.0, "entry_len": 50.0, "exit_len": 50.0, "arc_angle": 90.0},
    Template.TJUNCTION_LEFT: {"lane_width": 3.5, "angle": 90.0, "gap": 20.0, "arm_len": 100.0},
    Template.TJUNCTION_RIGHT: {"lane_width": 3.5, "angle": 90.0, "gap": 20.0, "arm_len": 100.0},
    Template.COMPLEX: {"lane_width": 3.5, "radius": 150.0, "angle": 90.0, "gap": 20.0, "arm_len": 100.0,
                       "entry_len": 50.0, "exit_len": 50.0, "arc_angle": 90.0},
}

# road ids used by the templates
WEST_ARM, EAST_ARM, MINOR_ARM, CURVE_ROAD = "1", "2", "3", "4"
JUNCTION_ID = "100"

TABLE_ANGLE_RANGE = (35.0, 135.0)


@dataclass(frozen=True)
class ParamRange:
    name: str
    min: float
    max: float
    unit: str = "m"

    def __post_init__(self):
        if self.min > self.max:
            raise ValueError(f"range {self.name}: min {self.min} > max {self.max}")
        if self.unit not in ("m", "deg"):
            raise ValueError(f"unit must be 'm' or 'deg', got {self.unit!r}")


def linspace_variants(rng: ParamRange, n: int) -> list[float]:
    if n < 1:
        raise InvalidCountError(f"variant count must be >= 1, got {n}")
    if n == 1:
        return [0.5 * (rng.min + rng.max)]
    return [float(v) for v in np.linspace(rng.min, rng.max, n)]


# ---------------------------------------------------------------- templates

def _chain(road_id: str, start: Pose2D, pieces, lane_width: float, **kw) -> Road:
    segs = []
    pose = start
    for length, curvature in pieces:
        seg = GeomSegment.line(pose, length) if curvature == 0 else GeomSegment.arc(pose, length, curvature)
        segs.append(seg)
        pose = segment_end_pose(seg)
    return Road(road_id, tuple(segs), lane_width, **kw)


def _check_curve(lane_width, radius, entry_len, exit_len, arc_angle):
    if not lane_width > 0:
        raise GeometryError(f"lane width must be positive, got {lane_width}")
    if entry_len <= 0 or exit_len <= 0:
        raise GeometryError("entry and exit lengths must be positive")
    if not 0 < arc_angle <= math.pi:
        raise GeometryError(f"arc angle must lie in (0, pi], got {arc_angle}")
    if radius <= lane_width:
        raise DegenerateGeometryError(f"curve radius {radius} m does not exceed lane width {lane_width} m")


def _curve_pieces(radius, direction, entry_len, exit_len, arc_angle):
    sign = 1.0 if direction == "left" else -1.0
    return [(entry_len, 0.0), (radius * arc_angle, sign / radius), (exit_len, 0.0)]


def gen_curved_road(lane_width: float, radius: float, direction: str = "left", entry_len: float = 50.0,
                    exit_len: float = 50.0, arc_angle: float = math.pi / 2) -> RoadNetwork:
    """Single road: entry tangent, circular arc, exit tangent, starting at the origin heading +x."""
    if direction not in ("left", "right"):
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
    _check_curve(lane_width, radius, entry_len, exit_len, arc_angle)
    road = _chain("1", Pose2D(0.0, 0.0, 0.0), _curve_pieces(radius, direction, entry_len, exit_len, arc_angle),
                  lane_width)
    return _checked(RoadNetwork((road,)))


def _checked(net: RoadNetwork) -> RoadNetwork:
    for road in net.roads:
        check_lane_offset(road, 1)
        check_lane_offset(road, -1)
    problems = validate_network(net)
    if problems:
        raise GeometryError("generated network is invalid: " + "; ".join(map(str, problems)))
    return net


def _connector(conn_id: str, a: Road, b: Road, gap: float, lane_width: float) -> Optional[Road]:
    """Fillet from the junction end of arm ``a`` to the junction end of arm ``b``.

    Both arm centerlines pass through the crossing point and end ``gap`` from it,
    so a single arc tangent to both always exists; its radius is gap / tan(turn/2).
    Returns None for a reversal (the two arms coincide).
    """
    start = a.end_pose
    end = b.end_pose
    turn = normalize_angle(end.heading + math.pi - start.heading)
    if abs(turn) > math.pi - 1e-6:
        return None
    link_kw = dict(predecessor=Link("road", a.id, "end"), successor=Link("road", b.id, "end"), junction=JUNCTION_ID)
    if abs(turn) < 1e-12:
        length = start.distance_to(end)
        return Road(conn_id, (GeomSegment.line(start, length),), lane_width, **link_kw)
    radius = gap / math.tan(0.5 * abs(turn))
    if radius <= lane_width:
        raise DegenerateGeometryError(
            f"junction fillet between roads {a.id} and {b.id} has radius {radius:.4g} m <= lane width {lane_width} m"
        )
    seg = GeomSegment.arc(start, radius * abs(turn), math.copysign(1.0 / radius, turn))
    miss = segment_end_pose(seg).distance_to(end)
    if miss > 1e-9:
        raise GeometryError(f"fillet construction missed arm {b.id} by {miss:.3g} m")
    return Road(conn_id, (seg,), lane_width, **link_kw)


def _t_junction_roads(lane_width, angle, gap, minor_arm, arm_len):
    if not lane_width > 0:
        raise GeometryError(f"lane width must be positive, got {lane_width}")
    if not gap > 0 or not arm_len > 0:
        raise GeometryError("junction gap and arm length must be positive")
    if minor_arm not in ("left", "right"):
        raise ValueError(f"minor_arm must be 'left' or 'right', got {minor_arm!r}")
    lo, hi = TABLE_ANGLE_RANGE
    if not lo <= angle <= hi:
        warnings.warn(f"intersection angle {angle} deg outside the studied range {lo}-{hi} deg", stacklevel=3)
    phi = math.radians(angle)
    side = 1.0 if minor_arm == "left" else -1.0
    outward = {
        WEST_ARM: (-1.0, 0.0),
        EAST_ARM: (1.0, 0.0),
        MINOR_ARM: (math.cos(phi), side * math.sin(phi)),
    }
    arms = {}
    for rid, (ux, uy) in outward.items():
        # arms run from their outer end toward the crossing point at the origin
        start = Pose2D((gap + arm_len) * ux, (gap + arm_len) * uy, math.atan2(-uy, -ux))
        arms[rid] = Road(rid, (GeomSegment.line(start, arm_len),), lane_width,
                         successor=Link("junction", JUNCTION_ID))
    connectors, connections = [], []
    next_id = int(JUNCTION_ID) + 1
    for a_id, b_id in ((WEST_ARM, EAST_ARM), (WEST_ARM, MINOR_ARM), (EAST_ARM, MINOR_ARM)):
        road = _connector(str(next_id), arms[a_id], arms[b_id], gap, lane_width)
        if road is None:
            continue
        next_id += 1
        connectors.append(road)
        connections.append(Connection(a_id, road.id, b_id, "start", ((-1, -1),)))
        connections.append(Connection(b_id, road.id, a_id, "end", ((-1, 1),)))
    connections.sort(key=lambda c: (c.incoming_road, c.outgoing_road))
    return arms, connectors, Junction(JUNCTION_ID, tuple(connections))


def gen_t_junction(lane_width: float, angle: float = 90.0, gap: float = 20.0, minor_arm: str = "right",
                   arm_len: float = 100.0) -> RoadNetwork:
    """Through road (west and east arms) plus a minor arm at ``angle`` degrees from the east arm.

    Every arm ends ``gap`` metres from the virtual crossing point; one connecting
    road (with a lane per direction) joins each pair of arms.
    """
    arms, connectors, junction = _t_junction_roads(lane_width, angle, gap, minor_arm, arm_len)
    roads = [arms[WEST_ARM], arms[EAST_ARM], arms[MINOR_ARM], *connectors]
    return _checked(RoadNetwork(tuple(roads), (junction,)))


def gen_complex(lane_width: float, radius: float, angle: float = 90.0, gap: float = 20.0, arm_len: float = 100.0,
                entry_len: float = 50.0, exit_len: float = 50.0, arc_angle: float = math.pi / 2,
                curve_direction: str = "left", minor_arm: str = "right") -> RoadNetwork:
    """T-junction whose west arm continues, at its outer end, into a curved section."""
    _check_curve(lane_width, radius, entry_len, exit_len, arc_angle)
    arms, connectors, junction = _t_junction_roads(lane_width, angle, gap, minor_arm, arm_len)
    west = arms[WEST_ARM]
    outer = west.start_pose
    curve = _chain(CURVE_ROAD, Pose2D(outer.x, outer.y, outer.heading + math.pi),
                   _curve_pieces(radius, curve_direction, entry_len, exit_len, arc_angle), lane_width,
                   predecessor=Link("road", WEST_ARM, "start"))
    west = Road(west.id, west.segments, lane_width, predecessor=Link("road", CURVE_ROAD, "start"),
                successor=west.successor)
    roads = [west, arms[EAST_ARM], arms[MINOR_ARM], curve, *connectors]
    return _checked(RoadNetwork(tuple(roads), (junction,)))


def build_network(template: Template, params: dict[str, float]) -> RoadNetwork:
    p = {**DEFAULT_PARAMS[template], **params}
    unknown = set(p) - set(DEFAULT_PARAMS[template])
    if unknown:
        raise ValueError(f"unknown parameters for {template.value}: {sorted(unknown)}")
    if template in (Template.CURVED_LEFT, Template.CURVED_RIGHT):
        direction = "left" if template is Template.CURVED_LEFT else "right"
        return gen_curved_road(p["lane_width"], p["radius"], direction, p["entry_len"], p["exit_len"],
                               math.radians(p["arc_angle"]))
    if template in (Template.TJUNCTION_LEFT, Template.TJUNCTION_RIGHT):
        return gen_t_junction(p["lane_width"], p["angle"], p["gap"], "right", p["arm_len"])
    return gen_complex(p["lane_width"], p["radius"], p["angle"], p["gap"], p["arm_len"], p["entry_len"],
                       p["exit_len"], math.radians(p["arc_angle"]))


# ------------------------------------------------------------------ scenarios

SValue = Union[float, str]


@dataclass(frozen=True)
class RoutePoint:
    road: str
    lane: int
    s: float


@dataclass(frozen=True)
class RouteSpec:
    """Route endpoints; ``s`` may be a number or ``"end"`` / ``"end-<metres>"``."""
    start_road: str
    start_lane: int
    start_s: SValue
    target_road: str
    target_lane: int
    target_s: SValue


@dataclass(frozen=True)
class ResolvedRoute:
    start: RoutePoint
    target: RoutePoint


DEFAULT_ROUTES = {
    Template.CURVED_LEFT: RouteSpec("1", -1, 5.0, "1", -1, "end-5"),
    Template.CURVED_RIGHT: RouteSpec("1", -1, 5.0, "1", -1, "end-5"),
    Template.TJUNCTION_LEFT: RouteSpec(MINOR_ARM, -1, 5.0, WEST_ARM, 1, 5.0),
    Template.TJUNCTION_RIGHT: RouteSpec(MINOR_ARM, -1, 5.0, EAST_ARM, 1, 5.0),
    Template.COMPLEX: RouteSpec(MINOR_ARM, -1, 5.0, CURVE_ROAD, -1, "end-5"),
}


_END_RE = re.compile(r"^end(?:-(\d+(?:\.\d*)?))?$")


def _resolve_s(value: SValue, length: float) -> float:
    if isinstance(value, str):
        m = _END_RE.match(value.replace(" ", ""))
        if m is None:
            raise RouteError(f"bad station expression {value!r}")
        return length - float(m.group(1) or 0.0)
    return float(value)


def resolve_route(spec: RouteSpec, net: RoadNetwork) -> ResolvedRoute:
    points = []
    for road_id, lane, s in ((spec.start_road, spec.start_lane, spec.start_s),
                             (spec.target_road, spec.target_lane, spec.target_s)):
        if not net.has_road(road_id):
            raise RouteError(f"route references missing road {road_id}")
        if lane not in (-1, 1):
            raise RouteError(f"lane must be -1 or 1, got {lane}")
        road = net.road(road_id)
        value = _resolve_s(s, road.length)
        if not -1e-9 <= value <= road.length + 1e-9:
            raise RouteError(f"station {value} outside road {road_id} (length {road.length:.3f})")
        points.append(RoutePoint(road_id, int(lane), value))
    if points[0] == points[1]:
        raise RouteError("route start equals target")
    return ResolvedRoute(*points)


@dataclass(frozen=True)
class LogicalScenario:
    name: str
    template: Template
    varied: ParamRange
    variant_count: int
    fixed: dict[str, float] = field(default_factory=dict)
    route: Optional[RouteSpec] = None
    # extra swept ranges, only honoured when ``cartesian`` is set
    grid: tuple[tuple[ParamRange, int], ...] = ()
    cartesian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "template", Template(self.template))
        if self.varied.name in self.fixed:
            raise ValueError(f"{self.name}: varied parameter {self.varied.name!r} also listed as fixed")
        if self.variant_count < 1:
            raise InvalidCountError(f"{self.name}: variant count must be >= 1")
        if self.grid and not self.cartesian:
            raise ValueError(f"{self.name}: grid ranges need cartesian = true")
        allowed = set(DEFAULT_PARAMS[self.template])
        names = [self.varied.name, *self.fixed, *(r.name for r, _ in self.grid)]
        unknown = [n for n in names if n not in allowed]
        if unknown:
            raise ValueError(f"{self.name}: unknown parameters {unknown} for template {self.template.value}")

    @property
    def route_spec(self) -> RouteSpec:
        return self.route or DEFAULT_ROUTES[self.template]

    def parameter_sets(self) -> list[dict[str, float]]:
        axes = [(self.varied.name, linspace_variants(self.varied, self.variant_count))]
        if self.cartesian:
            axes += [(r.name, linspace_variants(r, n)) for r, n in self.grid]
        names = [a for a, _ in axes]
        return [{**self.fixed, **dict(zip(names, combo))} for combo in itertools.product(*(v for _, v in axes))]


@dataclass(frozen=True)
class ConcreteScenario:
    id: str
    logical: str
    template: Template
    params: dict[str, float]
    network: Optional[RoadNetwork]
    route: Optional[ResolvedRoute]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def lane_width(self) -> float:
        return {**DEFAULT_PARAMS[self.template], **self.params}["lane_width"]


def concrete_from_params(scenario_id: str, logical: str, template: Template, params: dict[str, float],
                         route: RouteSpec) -> ConcreteScenario:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            net = build_network(template, params)
        resolved = resolve_route(route, net)
    except (AdfTestError, ValueError) as exc:
        return ConcreteScenario(scenario_id, logical, template, params, None, None, f"{type(exc).__name__}: {exc}")
    return ConcreteScenario(scenario_id, logical, template, params, net, resolved)


def expand_logical(ls: LogicalScenario) -> list[ConcreteScenario]:
    """One concrete scenario per parameter set; failed generations carry an error record."""
    return [concrete_from_params(f"{ls.name}-{i:04d}", ls.name, ls.template, params, ls.route_spec)
            for i, params in enumerate(ls.parameter_sets())]


# ------------------------------------------------------------ definition files

def _parse_range(name, table, where):
    try:
        rng = ParamRange(name, float(table["min"]), float(table["max"]), table.get("unit", "m"))
        return rng, int(table["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad range for {name!r}: {exc}") from exc


def logical_from_mapping(data: dict[str, Any], where: str = "<definition>") -> LogicalScenario:
    try:
        name = str(data["name"])
        template = Template(data["template"])
        varied = data["varied"]
        rng, count = _parse_range(varied["name"], varied, where)
        fixed = {k: float(v) for k, v in data.get("fixed", {}).items()}
        route = None
        if "route" in data:
            r = data["route"]
            route = RouteSpec(str(r["start_road"]), int(r["start_lane"]), r["start_s"],
                              str(r["target_road"]), int(r["target_lane"]), r["target_s"])
        grid = tuple(_parse_range(g["name"], g, where) for g in data.get("grid", []))
        return LogicalScenario(name, template, rng, count, fixed, route, grid, bool(data.get("cartesian", False)))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{where}: invalid logical scenario definition: {exc!r}") from exc


def load_definition(path: Union[str, Path]) -> LogicalScenario:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return logical_from_mapping(data, str(path))


def load_definitions(directory: Union[str, Path]) -> list[LogicalScenario]:
    directory = Path(directory)
    files = sorted(directory.glob("*.toml")) if directory.is_dir() else [directory]
    scenarios = [load_definition(f) for f in files if f.exists()]
    names = [s.name for s in scenarios]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise FormatError(f"duplicate logical scenario names: {dupes}")
    return scenarios


def stock_definitions_dir() -> Path:
    return Path(__file__).parent / "data" / "definitions"
