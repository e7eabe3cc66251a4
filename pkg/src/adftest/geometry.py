"""Planar road geometry: line/arc reference lines, lane offsets and network topology."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from .errors import DegenerateGeometryError, GeometryError

TWO_PI = 2.0 * math.pi

GENERATED_TOL = 1e-9
PARSED_TOL = 1e-6


def normalize_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.remainder(angle, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


def normalize_angles(angles: np.ndarray) -> np.ndarray:
    a = np.remainder(angles + math.pi, TWO_PI) - math.pi
    return np.where(a <= -math.pi, a + TWO_PI, a)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(float(self.heading)))

    def distance_to(self, other: Pose2D) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class GeomSegment:
    kind: Literal["line", "arc"]
    start: Pose2D
    length: float
    curvature: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise GeometryError(f"segment length must be positive, got {self.length}")
        if self.kind == "line":
            if self.curvature != 0.0:
                raise GeometryError("line segment with nonzero curvature")
        elif self.kind == "arc":
            if self.curvature == 0.0 or not math.isfinite(self.curvature):
                raise GeometryError("arc segment needs finite nonzero curvature")
        else:
            raise GeometryError(f"unknown segment kind {self.kind!r}")

    @classmethod
    def line(cls, start: Pose2D, length: float) -> GeomSegment:
        return cls("line", start, length, 0.0)

    @classmethod
    def arc(cls, start: Pose2D, length: float, curvature: float) -> GeomSegment:
        return cls("arc", start, length, curvature)


def _advance(x0, y0, h0, kappa, u):
    # chord form: stable for small kappa*u and exact for kappa == 0
    chord = u * np.sinc(kappa * u / TWO_PI)
    mid = h0 + 0.5 * kappa * u
    return x0 + chord * np.cos(mid), y0 + chord * np.sin(mid), h0 + kappa * u


def segment_end_pose(seg: GeomSegment) -> Pose2D:
    s = seg.start
    if seg.kind == "line":
        return Pose2D(s.x + seg.length * math.cos(s.heading), s.y + seg.length * math.sin(s.heading), s.heading)
    k, L = seg.curvature, seg.length
    chord = 2.0 * math.sin(0.5 * k * L) / k
    mid = s.heading + 0.5 * k * L
    return Pose2D(s.x + chord * math.cos(mid), s.y + chord * math.sin(mid), s.heading + k * L)


@dataclass(frozen=True)
class Link:
    element_type: Literal["road", "junction"]
    element_id: str
    contact_point: Optional[Literal["start", "end"]] = None


@dataclass(frozen=True)
class Road:
    id: str
    segments: tuple[GeomSegment, ...]
    lane_width: float
    predecessor: Optional[Link] = None
    successor: Optional[Link] = None
    junction: Optional[str] = None
    # RHT: lane -1 drives along the reference line; LHT: lane +1 does
    rule: Literal["RHT", "LHT"] = "RHT"

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def length(self) -> float:
        return float(sum(seg.length for seg in self.segments))

    @property
    def start_pose(self) -> Pose2D:
        return self.segments[0].start

    @property
    def end_pose(self) -> Pose2D:
        return segment_end_pose(self.segments[-1])

    def endpoint(self, which: str) -> Pose2D:
        return self.start_pose if which == "start" else self.end_pose

    def link(self, which: str) -> Optional[Link]:
        return self.predecessor if which == "start" else self.successor

    def forward_lane(self) -> int:
        """Lane id whose traffic follows the reference direction."""
        return -1 if self.rule == "RHT" else 1

    def poses_at(self, s: np.ndarray):
        """Vectorised (x, y, heading, curvature) at reference-line stations ``s``."""
        s = np.asarray(s, dtype=float)
        starts = np.cumsum([0.0] + [seg.length for seg in self.segments[:-1]])
        idx = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(self.segments) - 1)
        x0 = np.array([seg.start.x for seg in self.segments])[idx]
        y0 = np.array([seg.start.y for seg in self.segments])[idx]
        h0 = np.array([seg.start.heading for seg in self.segments])[idx]
        k = np.array([seg.curvature for seg in self.segments])[idx]
        x, y, h = _advance(x0, y0, h0, k, s - starts[idx])
        return x, y, normalize_angles(h), k

    def lane_center_point(self, lane: int, s: float) -> tuple[float, float]:
        x, y, h, _ = self.poses_at(np.array([s]))
        off = math.copysign(0.5 * self.lane_width, lane)
        return float(x[0] - off * math.sin(h[0])), float(y[0] + off * math.cos(h[0]))


@dataclass(frozen=True)
class Connection:
    incoming_road: str
    connecting_road: str
    outgoing_road: str
    contact_point: Literal["start", "end"]
    lane_links: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class Junction:
    id: str
    connections: tuple[Connection, ...]

    def __post_init__(self):
        object.__setattr__(self, "connections", tuple(self.connections))

    @property
    def incoming_road_ids(self) -> list[str]:
        seen = []
        for c in self.connections:
            if c.incoming_road not in seen:
                seen.append(c.incoming_road)
        return seen


@dataclass(frozen=True)
class RoadNetwork:
    roads: tuple[Road, ...]
    junctions: tuple[Junction, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "roads", tuple(self.roads))
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "_index", {r.id: r for r in self.roads})

    def road(self, road_id: str) -> Road:
        return self._index[road_id]

    def has_road(self, road_id: str) -> bool:
        return road_id in self._index

    def junction(self, junction_id: str) -> Junction:
        for j in self.junctions:
            if j.id == junction_id:
                return j
        raise KeyError(junction_id)

    @property
    def total_length(self) -> float:
        return float(sum(r.length for r in self.roads))


@dataclass(frozen=True)
class Centerline:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    curvature: np.ndarray

    def __len__(self):
        return len(self.s)

    def poses(self) -> list[Pose2D]:
        return [Pose2D(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.y, self.heading)]


def _stations(total: float, ds: float) -> np.ndarray:
    n = int(math.floor(total / ds + 1e-9))
    s = np.arange(n + 1, dtype=float) * ds
    if total - s[-1] > 1e-9:
        s = np.append(s, total)
    else:
        s[-1] = total
    return s


def sample_centerline(road: Road, ds: float) -> Centerline:
    """Sample the reference line at 0, ds, 2 ds, ... plus the final station."""
    if not ds > 0:
        raise ValueError("ds must be positive")
    s = _stations(road.length, ds)
    x, y, h, k = road.poses_at(s)
    return Centerline(s, x, y, h, k)


def _lane_side(lane) -> int:
    if lane in ("left", "left-of-center", 1, +1):
        return 1
    if lane in ("right", "right-of-center", -1):
        return -1
    raise ValueError(f"unknown lane {lane!r}")


def check_lane_offset(road: Road, side: int) -> None:
    w = road.lane_width
    for seg in road.segments:
        if seg.kind != "arc":
            continue
        radius = 1.0 / abs(seg.curvature)
        # the boundary on the arc's centre side shrinks
        r_off = radius - w if side * seg.curvature > 0 else radius + w
        if r_off <= 0:
            raise DegenerateGeometryError(
                f"road {road.id}: lane width {w} exceeds arc radius {radius:.6g} (offset radius {r_off:.6g})"
            )


def offset_polyline(cl: Centerline, offset: float) -> np.ndarray:
    return np.column_stack((cl.x - offset * np.sin(cl.heading), cl.y + offset * np.cos(cl.heading)))


def lane_boundaries(road: Road, lane, ds: float) -> tuple[np.ndarray, np.ndarray]:
    """(inner, outer) boundary polylines of one lane, in reference-line order.

    ``inner`` is the reference line itself; ``outer`` is offset by the lane width
    to the lane's side.
    """
    side = _lane_side(lane)
    check_lane_offset(road, side)
    cl = sample_centerline(road, ds)
    return np.column_stack((cl.x, cl.y)), offset_polyline(cl, side * road.lane_width)


@dataclass(frozen=True)
class Violation:
    element: str
    rule: str
    detail: str = ""

    def __str__(self):
        return f"{self.element}: {self.rule} {self.detail}".rstrip()


def _heading_gap(a: float, b: float) -> float:
    return abs(normalize_angle(a - b))


def validate_network(net: RoadNetwork, tol: float = GENERATED_TOL) -> list[Violation]:
    """All invariant violations of ``net``; empty when the network is well formed."""
    out: list[Violation] = []
    ids = [r.id for r in net.roads]
    for rid in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation(f"road {rid}", "duplicate-id"))
    junction_ids = [j.id for j in net.junctions]
    for jid in sorted({i for i in junction_ids if junction_ids.count(i) > 1}):
        out.append(Violation(f"junction {jid}", "duplicate-id"))
    roads = {r.id: r for r in net.roads}
    junctions = {j.id: j for j in net.junctions}

    for road in net.roads:
        tag = f"road {road.id}"
        if not road.lane_width > 0:
            out.append(Violation(tag, "lane-width", f"{road.lane_width}"))
        if not road.segments:
            out.append(Violation(tag, "empty-road"))
            continue
        for i in range(len(road.segments) - 1):
            end = segment_end_pose(road.segments[i])
            nxt = road.segments[i + 1].start
            gap = end.distance_to(nxt)
            if gap > tol:
                out.append(Violation(tag, "g0-continuity", f"segments {i}/{i + 1} gap {gap:.3g} m"))
            dh = _heading_gap(end.heading, nxt.heading)
            if dh > tol:
                out.append(Violation(tag, "g1-continuity", f"segments {i}/{i + 1} heading jump {dh:.3g} rad"))
        if road.junction is not None and road.junction not in junctions:
            out.append(Violation(tag, "dangling-reference", f"junction {road.junction}"))
        for which in ("start", "end"):
            link = road.link(which)
            if link is None:
                continue
            if link.element_type == "junction":
                j = junctions.get(link.element_id)
                if j is None:
                    out.append(Violation(tag, "dangling-reference", f"junction {link.element_id}"))
                elif road.id not in j.incoming_road_ids:
                    out.append(Violation(tag, "asymmetric-link", f"junction {j.id} lists no connection from it"))
                continue
            other = roads.get(link.element_id)
            if other is None:
                out.append(Violation(tag, "dangling-reference", f"road {link.element_id}"))
                continue
            if link.contact_point not in ("start", "end"):
                out.append(Violation(tag, "missing-contact-point", f"link to road {other.id}"))
                continue
            back = other.link(link.contact_point)
            symmetric = back is not None and (
                (back.element_type == "road" and back.element_id == road.id and back.contact_point == which)
                or (back.element_type == "junction" and road.junction == back.element_id)
            )
            if not symmetric:
                out.append(Violation(tag, "asymmetric-link", f"road {other.id} does not link back"))
            if other.segments:
                p, q = road.endpoint(which), other.endpoint(link.contact_point)
                if p.distance_to(q) > tol:
                    out.append(Violation(tag, "link-g0", f"gap {p.distance_to(q):.3g} m to road {other.id}"))
                # same orientation for end->start joints, reversed for start-start / end-end
                expected = q.heading if which != link.contact_point else q.heading + math.pi
                if _heading_gap(p.heading, expected) > tol:
                    out.append(Violation(tag, "link-g1", f"heading mismatch with road {other.id}"))

    for j in net.junctions:
        tag = f"junction {j.id}"
        for c in j.connections:
            missing = [rid for rid in (c.incoming_road, c.connecting_road, c.outgoing_road) if rid not in roads]
            for rid in missing:
                out.append(Violation(tag, "dangling-reference", f"road {rid}"))
            if missing:
                continue
            conn = roads[c.connecting_road]
            if conn.junction != j.id:
                out.append(Violation(tag, "connecting-road", f"road {conn.id} not marked as part of junction"))
            other_end = "end" if c.contact_point == "start" else "start"
            for arm_id, conn_end in ((c.incoming_road, c.contact_point), (c.outgoing_road, other_end)):
                arm = roads[arm_id]
                arm_ends = [w for w in ("start", "end") if (lk := arm.link(w)) is not None
                            and lk.element_type == "junction" and lk.element_id == j.id]
                if not arm_ends or not conn.segments or not arm.segments:
                    out.append(Violation(tag, "junction-geometry", f"road {arm_id} is not attached to junction"))
                    continue
                gap = conn.endpoint(conn_end).distance_to(arm.endpoint(arm_ends[0]))
                if gap > max(tol, PARSED_TOL):
                    out.append(Violation(tag, "junction-geometry",
                                         f"connecting road {conn.id} misses road {arm_id} by {gap:.3g} m"))
    return out


def reflect_pose(p: Pose2D) -> Pose2D:
    return Pose2D(p.x, -p.y, -p.heading)


def reflect_network(net: RoadNetwork, flip_rule: bool = True) -> RoadNetwork:
    """Mirror across the x axis; by default traffic hand flips too, so lanes keep their driving sense."""
    roads = []
    for r in net.roads:
        segs = [GeomSegment(s.kind, reflect_pose(s.start), s.length, -s.curvature if s.kind == "arc" else 0.0)
                for s in r.segments]
        rule = ("LHT" if r.rule == "RHT" else "RHT") if flip_rule else r.rule
        roads.append(replace(r, segments=tuple(segs), rule=rule))
    junctions = []
    for j in net.junctions:
        conns = [replace(c, lane_links=tuple((-a, -b) for a, b in c.lane_links)) if flip_rule else c
                 for c in j.connections]
        junctions.append(Junction(j.id, tuple(conns)))
    return RoadNetwork(tuple(roads), tuple(junctions))


def networks_close(a: RoadNetwork, b: RoadNetwork, tol: float = PARSED_TOL) -> bool:
    """Topology identical and geometry equal within ``tol`` (m and rad)."""
    if [r.id for r in a.roads] != [r.id for r in b.roads] or a.junctions != b.junctions:
        return False
    for ra, rb in zip(a.roads, b.roads):
        if (ra.predecessor, ra.successor, ra.junction, ra.rule) != (rb.predecessor, rb.successor, rb.junction, rb.rule):
            return False
        if abs(ra.lane_width - rb.lane_width) > tol or len(ra.segments) != len(rb.segments):
            return False
        for sa, sb in zip(ra.segments, rb.segments):
            if sa.kind != sb.kind:
                return False
            if max(abs(sa.start.x - sb.start.x), abs(sa.start.y - sb.start.y), abs(sa.length - sb.length),
                   _heading_gap(sa.start.heading, sb.start.heading), abs(sa.curvature - sb.curvature)) > tol:
                return False
    return True
