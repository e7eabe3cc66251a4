"""Concrete OpenSCENARIO files from a placeholder template, and parsing them back."""
from __future__ import annotations

import string
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
from xml.sax.saxutils import escape

from .errors import FormatError, ParseError, RouteError, TemplateError
from .roadgen import ConcreteScenario

VENDOR_PREFIX = "adftest:"
DEFAULT_VEHICLE = "vehicle.adf.prototype"


@dataclass(frozen=True)
class LanePosition:
    road: str
    lane: int
    s: float


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_name: str
    map_file: str
    start: LanePosition
    initial_speed: float
    target: LanePosition
    vehicle_ref: str = DEFAULT_VEHICLE
    attempt_limit: int = 3
    timeout: float = 180.0

    def __post_init__(self):
        if self.start == self.target:
            raise ValueError("start and target coincide")
        if self.initial_speed < 0:
            raise ValueError("initial speed must be non-negative")
        if self.attempt_limit < 1:
            raise ValueError("attempt limit must be >= 1")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class XoscTemplate:
    text: str

    @property
    def placeholders(self) -> list[str]:
        names = []
        for _, name, _, _ in string.Formatter().parse(self.text):
            if name is not None and name not in names:
                names.append(name)
        return names

    @property
    def pieces(self) -> list[tuple[str, Optional[str]]]:
        return [(literal, name) for literal, name, _, _ in string.Formatter().parse(self.text)]

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> XoscTemplate:
        path = Path(path) if path is not None else Path(__file__).parent / "data" / "template.xosc"
        return cls(path.read_text(encoding="utf-8"))


def _num(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def fill_template(template: XoscTemplate, values: dict[str, str]) -> str:
    out = []
    try:
        pieces = template.pieces
    except ValueError as exc:
        raise TemplateError(f"template syntax: {exc}") from exc
    for literal, name in pieces:
        out.append(literal)
        if name is None:
            continue
        if name not in values:
            raise TemplateError(f"unresolved placeholder {{{name}}}")
        out.append(escape(str(values[name]), {'"': "&quot;"}))
    return "".join(out)


def instantiate_xosc(template: XoscTemplate, cs: ConcreteScenario, map_file: str = "map.xodr",
                     initial_speed: float = 0.0, vehicle_ref: str = DEFAULT_VEHICLE, attempt_limit: int = 3,
                     timeout: float = 180.0) -> str:
    if not cs.ok or cs.route is None or cs.network is None:
        raise RouteError(f"scenario {cs.id} has no resolvable route ({cs.error})")
    for point in (cs.route.start, cs.route.target):
        if not cs.network.has_road(point.road):
            raise RouteError(f"route references missing road {point.road}")
    values = {
        "scenario_name": cs.id,
        "map_file": map_file,
        "start_road": cs.route.start.road,
        "start_lane": str(cs.route.start.lane),
        "start_s": _num(cs.route.start.s),
        "initial_speed": _num(initial_speed),
        "target_road": cs.route.target.road,
        "target_lane": str(cs.route.target.lane),
        "target_s": _num(cs.route.target.s),
        "vehicle_ref": vehicle_ref,
        "attempt_limit": str(int(attempt_limit)),
        "timeout": _num(timeout),
    }
    return fill_template(template, values)


def _lane_position(el, where) -> LanePosition:
    if el is None:
        raise FormatError(f"{where}: missing LanePosition")
    try:
        return LanePosition(el.attrib["roadId"], int(el.attrib["laneId"]), float(el.attrib["s"]))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{where}: bad LanePosition {el.attrib}") from exc


_KNOWN_STORYBOARD = {"Init", "Story", "StopTrigger"}


def parse_xosc(text: str) -> ScenarioConfig:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError("malformed OpenSCENARIO XML", *exc.position) from None
    if root.tag != "OpenSCENARIO":
        raise FormatError(f"root element is <{root.tag}>, expected <OpenSCENARIO>")
    header = root.find("FileHeader")
    logic = root.find("RoadNetwork/LogicFile")
    if logic is None or not logic.get("filepath"):
        raise FormatError("missing RoadNetwork/LogicFile")
    entities = root.find("Entities")
    if entities is None or entities.find("ScenarioObject") is None:
        raise FormatError("missing Entities/ScenarioObject")
    ego = entities.find("ScenarioObject")
    ego_name = ego.get("name")
    ref = ego.find("CatalogReference")
    vehicle_ref = ref.get("entryName") if ref is not None else (ego.find("Vehicle").get("name")
                                                                if ego.find("Vehicle") is not None else "")
    private = None
    for p in root.iterfind("Storyboard/Init/Actions/Private"):
        if p.get("entityRef") == ego_name:
            private = p
            break
    if private is None:
        raise FormatError(f"missing Init actions for entity {ego_name!r}")
    start = _lane_position(private.find(".//TeleportAction/Position/LanePosition"), "Init")
    speed_el = private.find(".//SpeedAction/SpeedActionTarget/AbsoluteTargetSpeed")
    initial_speed = float(speed_el.get("value")) if speed_el is not None else 0.0
    target_el = root.find("Storyboard/StopTrigger//ReachPositionCondition/Position/LanePosition")
    target = _lane_position(target_el, "StopTrigger")
    params = {p.get("name"): p.get("value") for p in root.iterfind("ParameterDeclarations/ParameterDeclaration")}
    storyboard = root.find("Storyboard")
    extra = [c.tag for c in storyboard if c.tag not in _KNOWN_STORYBOARD] if storyboard is not None else []
    if extra:
        warnings.warn(f"storyboard content ignored: {extra}", stacklevel=2)
    try:
        return ScenarioConfig(
            scenario_name=header.get("description", "") if header is not None else "",
            map_file=logic.get("filepath"),
            start=start,
            initial_speed=initial_speed,
            target=target,
            vehicle_ref=vehicle_ref,
            attempt_limit=int(params.get(VENDOR_PREFIX + "attemptLimit", 3)),
            timeout=float(params.get(VENDOR_PREFIX + "timeout", 180.0)),
        )
    except ValueError as exc:
        raise FormatError(f"invalid scenario configuration: {exc}") from exc
