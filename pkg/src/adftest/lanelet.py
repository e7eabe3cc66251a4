"""Lanelet-style lane map derived from a RoadNetwork, its OSM-XML form and routing graph."""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .errors import AdfTestError, DegenerateGeometryError, FormatError, ParseError
from .geometry import RoadNetwork, check_lane_offset, offset_polyline, sample_centerline

DEFAULT_ORIGIN = (49.0, 8.0)
METERS_PER_DEG = 111320.0


class ConversionError(AdfTestError):
    pass


@dataclass(frozen=True)
class Lanelet:
    left: int
    right: int
    attributes: dict = field(default_factory=dict)


@dataclass
class LaneletMap:
    nodes: dict[int, tuple[float, float]] = field(default_factory=dict)
    linestrings: dict[int, tuple[int, ...]] = field(default_factory=dict)
    lanelets: dict[int, Lanelet] = field(default_factory=dict)

    def points(self, linestring_id: int) -> np.ndarray:
        return np.array([self.nodes[n] for n in self.linestrings[linestring_id]], dtype=float)

    def boundaries(self, lanelet_id: int) -> tuple[np.ndarray, np.ndarray]:
        ll = self.lanelets[lanelet_id]
        return self.points(ll.left), self.points(ll.right)

    def centerline(self, lanelet_id: int) -> np.ndarray:
        left, right = self.boundaries(lanelet_id)
        return 0.5 * (left + right)

    def centerline_length(self, lanelet_id: int) -> float:
        c = self.centerline(lanelet_id)
        return float(np.sum(np.hypot(np.diff(c[:, 0]), np.diff(c[:, 1]))))

    def find(self, road_id: str, lane_id: int) -> int:
        for lid, ll in self.lanelets.items():
            if ll.attributes.get("road_id") == road_id and ll.attributes.get("lane_id") == str(lane_id):
                return lid
        raise KeyError(f"no lanelet for road {road_id} lane {lane_id}")

    def check(self) -> list[str]:
        problems = []
        for lid, ll in self.lanelets.items():
            for role, ls in (("left", ll.left), ("right", ll.right)):
                if ls not in self.linestrings:
                    problems.append(f"lanelet {lid}: dangling {role} linestring {ls}")
            if ll.left in self.linestrings and ll.right in self.linestrings:
                if len(self.linestrings[ll.left]) != len(self.linestrings[ll.right]):
                    problems.append(f"lanelet {lid}: boundary point counts differ")
        for sid, nodes in self.linestrings.items():
            problems += [f"linestring {sid}: dangling node {n}" for n in nodes if n not in self.nodes]
        return problems


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, k):
        self.parent.setdefault(k, k)
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the lexicographically smaller key as root for determinism
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def to_lanelets(net: RoadNetwork, ds: float = 1.0, junction_ds: float = 0.5) -> LaneletMap:
    """One lanelet per (road, lane); boundaries sampled from the road geometry.

    Boundary end nodes are shared across every road link, so successor
    relations appear exactly where roads physically connect.
    """
    if not ds > 0 or not junction_ds > 0:
        raise ValueError("sampling steps must be positive")
    # boundary polylines per road: center (reference), left (+w), right (-w)
    polylines = {}
    for road in net.roads:
        try:
            check_lane_offset(road, 1)
            check_lane_offset(road, -1)
        except DegenerateGeometryError as exc:
            raise ConversionError(f"road {road.id}: degenerate lane boundary ({exc})") from exc
        cl = sample_centerline(road, junction_ds if road.junction is not None else ds)
        polylines[road.id] = {
            "center": np.column_stack((cl.x, cl.y)),
            "left": offset_polyline(cl, road.lane_width),
            "right": offset_polyline(cl, -road.lane_width),
        }

    uf = _UnionFind()
    for road in net.roads:
        for which in ("start", "end"):
            link = road.link(which)
            if link is None or link.element_type != "road" or not net.has_road(link.element_id):
                continue
            other_end = link.contact_point
            same = which != other_end
            uf.union((road.id, "center", which), (link.element_id, "center", other_end))
            for side in ("left", "right"):
                mate = side if same else ("right" if side == "left" else "left")
                uf.union((road.id, side, which), (link.element_id, mate, other_end))

    lmap = LaneletMap()
    shared: dict = {}
    next_id = 1

    def new_node(xy):
        nonlocal next_id
        nid = next_id
        next_id += 1
        lmap.nodes[nid] = (float(xy[0]), float(xy[1]))
        return nid

    node_ids = {}
    for road in net.roads:
        for kind in ("center", "left", "right"):
            pts = polylines[road.id][kind]
            ids = []
            for i, p in enumerate(pts):
                if i == 0 or i == len(pts) - 1:
                    key = uf.find((road.id, kind, "start" if i == 0 else "end"))
                    if key not in shared:
                        shared[key] = new_node(p)
                    ids.append(shared[key])
                else:
                    ids.append(new_node(p))
            node_ids[(road.id, kind)] = ids

    lanelet_specs = []
    for road in net.roads:
        for lane in (-1, 1):
            along = lane == road.forward_lane()
            outer = node_ids[(road.id, "left" if lane > 0 else "right")]
            center = node_ids[(road.id, "center")]
            # driver's left is the reference line when side*direction is negative
            left_center = lane * (1 if along else -1) < 0
            left, right = (center, outer) if left_center else (outer, center)
            if not along:
                left, right = left[::-1], right[::-1]
            attrs = {"type": "lanelet", "subtype": "road", "one_way": "yes", "road_id": road.id,
                     "lane_id": str(lane)}
            if road.junction is not None:
                attrs["junction_id"] = road.junction
            lanelet_specs.append((left, right, attrs))

    for left, right, attrs in lanelet_specs:
        ls_left, ls_right = next_id, next_id + 1
        lmap.linestrings[ls_left] = tuple(left)
        lmap.linestrings[ls_right] = tuple(right)
        lmap.lanelets[next_id + 2] = Lanelet(ls_left, ls_right, attrs)
        next_id += 3
    return lmap


# ------------------------------------------------------------------ OSM I/O

def _fmt(x: float) -> str:
    return repr(float(x))


def emit_osm(lmap: LaneletMap, origin: tuple[float, float] = DEFAULT_ORIGIN) -> str:
    lat0, lon0 = origin
    if not (math.isfinite(lat0) and math.isfinite(lon0)):
        raise ValueError("origin must be finite")
    scale_lon = METERS_PER_DEG * math.cos(math.radians(lat0))
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="adftest">']
    for nid, (x, y) in lmap.nodes.items():
        lat = lat0 + y / METERS_PER_DEG
        lon = lon0 + x / scale_lon
        lines.append(f'  <node id="{nid}" visible="true" version="1" lat="{_fmt(lat)}" lon="{_fmt(lon)}"/>')
    for sid, refs in lmap.linestrings.items():
        lines.append(f'  <way id="{sid}" visible="true" version="1">')
        lines.extend(f'    <nd ref="{n}"/>' for n in refs)
        lines.append('    <tag k="type" v="line_thin"/>')
        lines.append('    <tag k="subtype" v="solid"/>')
        lines.append("  </way>")
    for lid, ll in lmap.lanelets.items():
        lines.append(f'  <relation id="{lid}" visible="true" version="1">')
        lines.append(f'    <member type="way" role="left" ref="{ll.left}"/>')
        lines.append(f'    <member type="way" role="right" ref="{ll.right}"/>')
        for k, v in ll.attributes.items():
            lines.append(f'    <tag k="{k}" v="{v}"/>')
        lines.append("  </relation>")
    lines.append("</osm>")
    return "\n".join(lines) + "\n"


def parse_osm(text: str, origin: tuple[float, float] = DEFAULT_ORIGIN) -> LaneletMap:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError("malformed OSM XML", *exc.position) from None
    if root.tag != "osm":
        raise FormatError(f"root element is <{root.tag}>, expected <osm>")
    lat0, lon0 = origin
    scale_lon = METERS_PER_DEG * math.cos(math.radians(lat0))
    lmap = LaneletMap()
    for n in root.iter("node"):
        lat, lon = float(n.attrib["lat"]), float(n.attrib["lon"])
        lmap.nodes[int(n.attrib["id"])] = ((lon - lon0) * scale_lon, (lat - lat0) * METERS_PER_DEG)
    for w in root.iter("way"):
        lmap.linestrings[int(w.attrib["id"])] = tuple(int(nd.attrib["ref"]) for nd in w.iter("nd"))
    for r in root.iter("relation"):
        tags = {t.attrib["k"]: t.attrib["v"] for t in r.iter("tag")}
        if tags.get("type") != "lanelet":
            continue
        roles = {m.get("role"): int(m.attrib["ref"]) for m in r.iter("member") if m.get("type") == "way"}
        missing = [role for role in ("left", "right") if role not in roles]
        if missing:
            raise FormatError(f"lanelet relation {r.get('id')} lacks {'/'.join(missing)} member")
        lmap.lanelets[int(r.attrib["id"])] = Lanelet(roles["left"], roles["right"], tags)
    problems = lmap.check()
    if problems:
        raise FormatError("inconsistent lanelet map: " + "; ".join(problems[:5]))
    return lmap


def maps_close(a: LaneletMap, b: LaneletMap, tol: float = 1e-6) -> bool:
    if a.linestrings != b.linestrings or a.lanelets != b.lanelets or a.nodes.keys() != b.nodes.keys():
        return False
    return all(math.hypot(a.nodes[k][0] - b.nodes[k][0], a.nodes[k][1] - b.nodes[k][1]) <= tol for k in a.nodes)


# ------------------------------------------------------------------ routing graph

@dataclass(frozen=True)
class RouteGraph:
    vertices: tuple[int, ...]
    edges: dict[int, tuple[tuple[int, float], ...]]
    lengths: dict[int, float]

    def successors(self, v: int) -> tuple[int, ...]:
        return tuple(s for s, _ in self.edges.get(v, ()))

    @property
    def edge_list(self) -> list[tuple[int, int, float]]:
        return [(u, v, w) for u in self.vertices for v, w in self.edges[u]]


def build_route_graph(lmap: LaneletMap) -> RouteGraph:
    vertices = tuple(sorted(lmap.lanelets))
    by_start: dict[tuple[int, int], list[int]] = {}
    for lid in vertices:
        ll = lmap.lanelets[lid]
        by_start.setdefault((lmap.linestrings[ll.left][0], lmap.linestrings[ll.right][0]), []).append(lid)
    lengths = {lid: lmap.centerline_length(lid) for lid in vertices}
    edges = {}
    for lid in vertices:
        ll = lmap.lanelets[lid]
        end = (lmap.linestrings[ll.left][-1], lmap.linestrings[ll.right][-1])
        edges[lid] = tuple((s, lengths[s]) for s in by_start.get(end, []) if s != lid)
    return RouteGraph(vertices, edges, lengths)


def reachable(graph: RouteGraph, start: int) -> set[int]:
    seen, stack = {start}, [start]
    while stack:
        for nxt in graph.successors(stack.pop()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen

