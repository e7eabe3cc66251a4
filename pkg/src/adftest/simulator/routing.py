"""Lanelet route search and the stitched reference path the controller follows."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import PlanningFailed
from ..lanelet import LaneletMap, RouteGraph

PATH_DS = 0.5
# straight run-out appended past the last lanelet so the lookahead never runs dry
RUNOUT = 30.0


@dataclass(frozen=True)
class Path:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    curvature: np.ndarray
    half_width: np.ndarray
    # station of each lanelet boundary along the path: len(lanelets) + 1 entries
    breaks: np.ndarray
    length: float

    def __len__(self):
        return len(self.s)


@dataclass(frozen=True)
class PlannedRoute:
    lanelets: tuple[int, ...]
    cost: float
    path: Path


def shortest_lanelet_path(graph: RouteGraph, start: int, target: int) -> tuple[tuple[int, ...], float]:
    """Dijkstra over lanelets; cost counts every lanelet after the first.

    Equal-cost paths are ordered by their id sequence, so the result is the
    lexicographically smallest among the shortest.
    """
    if start not in graph.edges or target not in graph.edges:
        raise PlanningFailed(f"unknown lanelet {start if start not in graph.edges else target}")
    heap = [(0.0, (start,))]
    settled = {}
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled[node] = (cost, path)
        if node == target:
            return path, cost
        for nxt, w in graph.edges[node]:
            if nxt not in settled:
                heapq.heappush(heap, (cost + w, path + (nxt,)))
    raise PlanningFailed(f"lanelet {target} unreachable from {start}")


def _stitch(lmap: LaneletMap, lanelets) -> tuple[np.ndarray, np.ndarray, list[int]]:
    pts, widths, joints = [], [], [0]
    for k, lid in enumerate(lanelets):
        left, right = lmap.boundaries(lid)
        center = 0.5 * (left + right)
        half = 0.5 * np.hypot(left[:, 0] - right[:, 0], left[:, 1] - right[:, 1])
        if k:
            center, half = center[1:], half[1:]
        pts.append(center)
        widths.append(half)
        joints.append(joints[-1] + len(center) - (0 if k else 1))
    return np.vstack(pts), np.concatenate(widths), joints


def build_path(lmap: LaneletMap, lanelets, ds: float = PATH_DS, runout: float = RUNOUT) -> Path:
    """Centerline through ``lanelets``: boundary midpoints, spline-resampled every ``ds`` metres."""
    pts, half, joints = _stitch(lmap, lanelets)
    step = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    keep = np.concatenate(([True], step > 1e-6))
    idx_map = np.cumsum(keep) - 1
    pts, half = pts[keep], half[keep]
    u = np.concatenate(([0.0], np.cumsum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])))))
    if len(u) < 2:
        raise PlanningFailed("route centerline has fewer than two distinct points")
    total = float(u[-1])
    n = int(np.floor(total / ds + 1e-9))
    s = np.arange(n + 1) * ds
    if total - s[-1] > 1e-9:
        s = np.append(s, total)
    if len(u) >= 3:
        spline = CubicSpline(u, pts)
        xy, d1, d2 = spline(s), spline(s, 1), spline(s, 2)
    else:
        t = s / total
        xy = pts[0] + np.outer(t, pts[1] - pts[0])
        d1 = np.tile((pts[1] - pts[0]) / total, (len(s), 1))
        d2 = np.zeros_like(d1)
    heading = np.arctan2(d1[:, 1], d1[:, 0])
    curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.hypot(d1[:, 0], d1[:, 1]) ** 3
    hw = np.interp(s, u, half)
    # straight run-out along the final heading
    extra = np.arange(1, int(np.ceil(runout / ds)) + 1) * ds
    ch, sh = np.cos(heading[-1]), np.sin(heading[-1])
    x = np.concatenate((xy[:, 0], xy[-1, 0] + extra * ch))
    y = np.concatenate((xy[:, 1], xy[-1, 1] + extra * sh))
    breaks = u[idx_map[np.asarray(joints)]]
    return Path(
        s=np.concatenate((s, total + extra)),
        x=x,
        y=y,
        heading=np.concatenate((heading, np.full(len(extra), heading[-1]))),
        curvature=np.concatenate((curvature, np.zeros(len(extra)))),
        half_width=np.concatenate((hw, np.full(len(extra), hw[-1]))),
        breaks=breaks,
        length=total,
    )


def plan_route(graph: RouteGraph, lmap: LaneletMap, start: int, target: int) -> PlannedRoute:
    lanelets, cost = shortest_lanelet_path(graph, start, target)
    return PlannedRoute(lanelets, cost, build_path(lmap, lanelets))
