"""OpenDRIVE 1.6 subset: line/arc plan views, one lane per side, constant widths, junctions."""
from __future__ import annotations

import warnings
import xml.etree.ElementTree as ET
from typing import Optional

from .errors import FormatError, GeometryError, ParseError, UnsupportedElementError
from .geometry import (
    PARSED_TOL,
    Connection,
    GeomSegment,
    Junction,
    Link,
    Pose2D,
    Road,
    RoadNetwork,
    validate_network,
)

HEADER_DATE = "2023-01-01T00:00:00"
GEO_REFERENCE = "+proj=tmerc +lat_0=49 +lon_0=8 +k=1 +x_0=0 +y_0=0 +ellps=WGS84 +units=m +no_defs"

_SKIPPED_ROAD_CHILDREN = {"elevationProfile", "lateralProfile", "signals", "objects", "type", "surface", "railroad"}


class OpenDriveWarning(UserWarning):
    pass


def _num(x: float) -> str:
    return f"{float(x):.17g}"


def _link_element(parent, tag, link: Link):
    attrs = {"elementType": link.element_type, "elementId": link.element_id}
    if link.contact_point is not None:
        attrs["contactPoint"] = link.contact_point
    ET.SubElement(parent, tag, attrs)


def _lane(parent, lane_id: int, width: Optional[float]):
    lane = ET.SubElement(parent, "lane", {"id": str(lane_id), "type": "driving" if width else "none",
                                         "level": "false"})
    ET.SubElement(lane, "link")
    if width is not None:
        ET.SubElement(lane, "width", {"sOffset": "0", "a": _num(width), "b": "0", "c": "0", "d": "0"})
        ET.SubElement(lane, "roadMark", {"sOffset": "0", "type": "solid" if lane_id > 0 else "broken",
                                         "weight": "standard", "color": "standard", "width": "0.12"})
    else:
        ET.SubElement(lane, "roadMark", {"sOffset": "0", "type": "solid", "weight": "standard",
                                         "color": "standard", "width": "0.12"})


def emit_opendrive(net: RoadNetwork, name: str = "network") -> str:
    problems = validate_network(net)
    if problems:
        raise GeometryError("refusing to emit invalid network: " + "; ".join(map(str, problems)))
    root = ET.Element("OpenDRIVE")
    header = ET.SubElement(root, "header", {"revMajor": "1", "revMinor": "6", "name": name, "version": "1.00",
                                            "date": HEADER_DATE, "north": "0", "south": "0", "east": "0",
                                            "west": "0", "vendor": "adftest"})
    ET.SubElement(header, "geoReference").text = GEO_REFERENCE
    for road in net.roads:
        el = ET.SubElement(root, "road", {"name": f"road {road.id}", "length": _num(road.length), "id": road.id,
                                          "junction": road.junction if road.junction is not None else "-1",
                                          "rule": road.rule})
        link = ET.SubElement(el, "link")
        if road.predecessor is not None:
            _link_element(link, "predecessor", road.predecessor)
        if road.successor is not None:
            _link_element(link, "successor", road.successor)
        plan = ET.SubElement(el, "planView")
        s = 0.0
        for seg in road.segments:
            g = ET.SubElement(plan, "geometry", {"s": _num(s), "x": _num(seg.start.x), "y": _num(seg.start.y),
                                                 "hdg": _num(seg.start.heading), "length": _num(seg.length)})
            if seg.kind == "line":
                ET.SubElement(g, "line")
            else:
                ET.SubElement(g, "arc", {"curvature": _num(seg.curvature)})
            s += seg.length
        lanes = ET.SubElement(el, "lanes")
        section = ET.SubElement(lanes, "laneSection", {"s": "0"})
        _lane(ET.SubElement(section, "left"), 1, road.lane_width)
        _lane(ET.SubElement(section, "center"), 0, None)
        _lane(ET.SubElement(section, "right"), -1, road.lane_width)
    for j in net.junctions:
        jel = ET.SubElement(root, "junction", {"id": j.id, "name": f"junction {j.id}"})
        for i, c in enumerate(j.connections):
            cel = ET.SubElement(jel, "connection", {"id": str(i), "incomingRoad": c.incoming_road,
                                                    "connectingRoad": c.connecting_road,
                                                    "contactPoint": c.contact_point})
            for a, b in c.lane_links:
                ET.SubElement(cel, "laneLink", {"from": str(a), "to": str(b)})
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _fromstring(text: str) -> ET.Element:
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}", line, col) from None


def _float(el, attr, where):
    try:
        return float(el.attrib[attr])
    except KeyError:
        raise FormatError(f"{where}: missing attribute {attr!r}") from None
    except ValueError:
        raise FormatError(f"{where}: attribute {attr!r} is not a number") from None


def _parse_link(el) -> Optional[Link]:
    if el is None:
        return None
    etype = el.get("elementType")
    if etype not in ("road", "junction"):
        raise FormatError(f"link with unsupported elementType {etype!r}")
    return Link(etype, el.attrib["elementId"], el.get("contactPoint"))


def _warn(msg):
    warnings.warn(msg, OpenDriveWarning, stacklevel=3)


def _parse_lane_width(road_el, rid) -> float:
    sections = road_el.findall("lanes/laneSection")
    if not sections:
        raise FormatError(f"road {rid}: no laneSection")
    if len(sections) > 1:
        _warn(f"road {rid}: {len(sections)} lane sections, only the first is used")
    widths = {}
    for lane in sections[0].iter("lane"):
        lid = int(lane.get("id", "0"))
        if lid == 0:
            continue
        if abs(lid) > 1:
            _warn(f"road {rid}: lane {lid} ignored (one lane per side supported)")
            continue
        w = lane.find("width")
        if w is None:
            raise FormatError(f"road {rid}: lane {lid} without width")
        if any(float(w.get(c, "0")) != 0.0 for c in "bcd"):
            _warn(f"road {rid}: non-constant lane width reduced to its constant term")
        widths[lid] = _float(w, "a", f"road {rid} lane {lid}")
    if not widths:
        raise FormatError(f"road {rid}: no driving lanes")
    if len(set(widths.values())) > 1:
        _warn(f"road {rid}: unequal lane widths {widths}, using lane -1")
    return widths.get(-1, next(iter(widths.values())))


def parse_opendrive(text: str, strict: bool = False) -> RoadNetwork:
    """Rebuild a RoadNetwork from the supported subset.

    Unsupported content (elevation, signals, objects, other geometry kinds) is
    skipped with an ``OpenDriveWarning``; with ``strict`` an unknown geometry
    kind raises ``UnsupportedElementError`` instead.
    """
    root = _fromstring(text)
    if root.tag != "OpenDRIVE":
        raise FormatError(f"root element is <{root.tag}>, expected <OpenDRIVE>")
    roads = []
    for road_el in root.findall("road"):
        rid = road_el.get("id")
        if rid is None:
            raise FormatError("road without id")
        for child in road_el:
            if child.tag in _SKIPPED_ROAD_CHILDREN:
                _warn(f"road {rid}: <{child.tag}> skipped")
        link_el = road_el.find("link")
        pred = _parse_link(link_el.find("predecessor")) if link_el is not None else None
        succ = _parse_link(link_el.find("successor")) if link_el is not None else None
        segments = []
        for g in road_el.findall("planView/geometry"):
            where = f"road {rid} geometry s={g.get('s')}"
            start = Pose2D(_float(g, "x", where), _float(g, "y", where), _float(g, "hdg", where))
            length = _float(g, "length", where)
            kinds = [c.tag for c in g]
            if kinds == ["line"]:
                segments.append(GeomSegment.line(start, length))
            elif kinds == ["arc"]:
                segments.append(GeomSegment.arc(start, length, _float(g[0], "curvature", where)))
            else:
                msg = f"{where}: unsupported geometry {kinds}"
                if strict:
                    raise UnsupportedElementError(msg)
                _warn(msg + " skipped")
        if not segments:
            raise FormatError(f"road {rid}: no supported geometry")
        junction = road_el.get("junction", "-1")
        roads.append(Road(rid, tuple(segments), _parse_lane_width(road_el, rid), pred, succ,
                          None if junction == "-1" else junction, road_el.get("rule", "RHT")))
    by_id = {r.id: r for r in roads}
    junctions = []
    for jel in root.findall("junction"):
        jid = jel.get("id")
        conns = []
        for cel in jel.findall("connection"):
            conn_id = cel.get("connectingRoad")
            contact = cel.get("contactPoint")
            if conn_id not in by_id or contact not in ("start", "end"):
                raise FormatError(f"junction {jid}: bad connection {cel.attrib}")
            far = by_id[conn_id].link("end" if contact == "start" else "start")
            outgoing = far.element_id if far is not None else ""
            links = tuple((int(ll.get("from")), int(ll.get("to"))) for ll in cel.findall("laneLink"))
            conns.append(Connection(cel.get("incomingRoad"), conn_id, outgoing, contact, links))
        junctions.append(Junction(jid, tuple(conns)))
    for tag in ("controller", "station"):
        if root.find(tag) is not None:
            _warn(f"<{tag}> elements skipped")
    return RoadNetwork(tuple(roads), tuple(junctions))


def check_structure(text: str) -> list[str]:
    """Schema-style check of an emitted document; returns problems, empty if fine."""
    root = _fromstring(text)
    problems = []
    header = root.find("header")
    if header is None:
        problems.append("missing <header>")
    else:
        problems += [f"header missing {a}" for a in ("revMajor", "revMinor", "name", "date") if a not in header.attrib]
    for road in root.findall("road"):
        rid = road.get("id", "?")
        problems += [f"road {rid} missing {a}" for a in ("id", "length", "junction") if a not in road.attrib]
        if road.find("planView") is None:
            problems.append(f"road {rid} missing planView")
        for g in road.findall("planView/geometry"):
            problems += [f"road {rid} geometry missing {a}" for a in ("s", "x", "y", "hdg", "length")
                         if a not in g.attrib]
        sections = road.findall("lanes/laneSection")
        if not sections:
            problems.append(f"road {rid} missing lanes/laneSection")
        for lane in road.iter("lane"):
            if lane.get("id") not in ("-1", "0", "1"):
                problems.append(f"road {rid} has lane id {lane.get('id')}")
    lanes_of = {r.get("id"): {lane.get("id") for lane in r.iter("lane")} for r in root.findall("road")}
    for j in root.findall("junction"):
        for c in j.findall("connection"):
            for a in ("incomingRoad", "connectingRoad", "contactPoint"):
                if a not in c.attrib:
                    problems.append(f"junction {j.get('id')} connection missing {a}")
            for ll in c.findall("laneLink"):
                if ll.get("from") not in lanes_of.get(c.get("incomingRoad"), ()):
                    problems.append(f"junction {j.get('id')}: laneLink from unknown lane {ll.get('from')}")
                if ll.get("to") not in lanes_of.get(c.get("connectingRoad"), ()):
                    problems.append(f"junction {j.get('id')}: laneLink to unknown lane {ll.get('to')}")
    return problems


def validate_parsed(net: RoadNetwork):
    return validate_network(net, tol=PARSED_TOL)
