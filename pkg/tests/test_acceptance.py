"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from adftest.evaluation import COMFORT_LABELS, KpiRefs, bandpass, comfort_class, compute_kpis, normalize_kpi, rms
from adftest.geometry import GeomSegment, Pose2D, networks_close, reflect_network, segment_end_pose
from adftest.lanelet import DEFAULT_ORIGIN, RouteGraph, build_route_graph, emit_osm, maps_close, parse_osm, to_lanelets
from adftest.opendrive import emit_opendrive, parse_opendrive
from adftest.openscenario import LanePosition, ScenarioConfig, XoscTemplate, instantiate_xosc, parse_xosc
from adftest.orchestrator import cmd_evaluate, cmd_generate, cmd_report, cmd_simulate, radius_sweep
from adftest.roadgen import (
    DEFAULT_ROUTES,
    Template,
    concrete_from_params,
    gen_curved_road,
    load_definitions,
    stock_definitions_dir,
)
from adftest.simulator import Status, Trajectory, export_csv, parse_csv, run_simulation, shortest_lanelet_path, simulate
from adftest.errors import PlanningFailed
from adftest.simulator.engine import COLUMNS
from oracles import brute_force_shortest, fine_rms, quadrature_pose, random_graphs, wrap

DT = 0.01


def test_criterion_1_geometry(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 1000
    x, y = rng.uniform(-1000, 1000, n), rng.uniform(-1000, 1000, n)
    h = rng.uniform(-math.pi, math.pi, n)
    length = rng.uniform(0.5, 400, n)
    kappa = rng.uniform(0.002, 0.5, n) * rng.choice([-1, 1], n)
    kappa[rng.random(n) < 0.2] = 0.0
    ox, oy, oh = quadrature_pose(x, y, h, kappa, length)
    worst_pos = worst_h = 0.0
    for i in range(n):
        kind = "arc" if kappa[i] else "line"
        e = segment_end_pose(GeomSegment(kind, Pose2D(x[i], y[i], h[i]), length[i], kappa[i]))
        worst_pos = max(worst_pos, math.hypot(e.x - ox[i], e.y - oy[i]))
        worst_h = max(worst_h, abs(wrap(e.heading - oh[i])))
    q = segment_end_pose(GeomSegment.arc(Pose2D(0, 0, 0), math.pi / 2 * 100, 0.01))
    quarter = max(abs(q.x - 100), abs(q.y - 100), abs(q.heading - math.pi / 2))
    elapsed = time.perf_counter() - t0
    ok = worst_pos < 1e-8 and worst_h < 1e-9 and quarter < 1e-9 and elapsed < 1.0
    verdict(1, ok, f"max end-pose error {worst_pos:.2e} m over {n} segments, quarter circle {quarter:.1e}, "
                   f"{elapsed:.2f} s")


def _stock_outputs():
    return [concrete_from_params(f"x-{t.value}", "x", t, {}, DEFAULT_ROUTES[t]) for t in Template]


def test_criterion_2_round_trips(verdict):
    cases = _stock_outputs()
    trajectories = [run_simulation(cs).trajectory for cs in cases]
    t0 = time.perf_counter()
    failures = []
    worst_csv = 0.0
    tpl = XoscTemplate.load()
    for cs, traj in zip(cases, trajectories):
        if not networks_close(parse_opendrive(emit_opendrive(cs.network, name=cs.id)), cs.network, 1e-6):
            failures.append(f"{cs.template.value} xodr")
        lmap = to_lanelets(cs.network)
        if not maps_close(lmap, parse_osm(emit_osm(lmap, DEFAULT_ORIGIN), DEFAULT_ORIGIN), 1e-6):
            failures.append(f"{cs.template.value} osm")
        cfg = parse_xosc(instantiate_xosc(tpl, cs, initial_speed=1.5, attempt_limit=3, timeout=120.0))
        expected = (cs.id, LanePosition(cs.route.start.road, cs.route.start.lane, cs.route.start.s),
                    LanePosition(cs.route.target.road, cs.route.target.lane, cs.route.target.s), 1.5, 3, 120.0)
        if (cfg.scenario_name, cfg.start, cfg.target, cfg.initial_speed, cfg.attempt_limit, cfg.timeout) != expected:
            failures.append(f"{cs.template.value} xosc")
        back = parse_csv(export_csv(traj))
        if len(back) != len(traj):
            failures.append(f"{cs.template.value} csv length")
        else:
            worst_csv = max(worst_csv, float(np.max(np.abs(back.data - traj.data))))
    elapsed = time.perf_counter() - t0
    ok = not failures and worst_csv <= 1e-9 and elapsed < 5.0
    verdict(2, ok, f"{len(cases)} templates, failures={failures or 'none'}, csv max error {worst_csv:.1e}, "
                   f"{elapsed:.2f} s")


def test_criterion_3_signals(verdict):
    t0 = time.perf_counter()
    fs = 1 / DT
    t = np.arange(0, 20, DT)
    amp = 1.7
    y = bandpass(amp * np.sin(2 * math.pi * 8 * t), fs)
    inband = rms(y, DT, 2.0, 18.0)
    inband_err = abs(inband / (amp / math.sqrt(2)) - 1)
    dc = float(np.max(np.abs(bandpass(np.ones_like(t), fs)[200:-200])))
    tl = np.arange(0, 60, DT)
    low = float(np.max(np.abs(bandpass(np.sin(2 * math.pi * 0.1 * tl), fs)[1000:-1000])))

    def smooth(tt):
        return np.sin(2 * math.pi * 2.3 * tt) * np.exp(-tt / 5) + 0.2 * np.cos(2 * math.pi * 0.7 * tt)

    ts = np.arange(0, 10, DT)
    trap = rms(smooth(ts), DT, 0.25, 9.75)
    oracle = fine_rms(smooth, 0.25, 9.75)
    trap_err = abs(trap / oracle - 1)
    elapsed = time.perf_counter() - t0
    ok = inband_err < 0.02 and dc < 0.05 and low < 0.1 and trap_err < 0.005 and elapsed < 1.0
    verdict(3, ok, f"in-band rms error {inband_err:.2%}, DC {dc:.1e}, 0.1 Hz {low:.3f}, trapezoid vs oracle "
                   f"{trap_err:.3%}, {elapsed:.2f} s")


def test_criterion_4_comfort(verdict):
    # one value inside each row of the perception table, overlaps resolved towards the worse label
    cases = [(0.2, 0), (0.4, 1), (0.7, 2), (0.9, 3), (1.4, 4), (3.0, 5), (0.55, 2)]
    wrong = [(v, comfort_class(v)) for v, k in cases if comfort_class(v) != COMFORT_LABELS[k]]
    ramp = np.linspace(0.0, 3.0, 30001)
    idx = [COMFORT_LABELS.index(comfort_class(v)) for v in ramp]
    monotone = all(a <= b for a, b in zip(idx, idx[1:]))
    verdict(4, not wrong and monotone, f"{len(cases)} cases, mismatches={wrong or 'none'}, monotone={monotone}")


def test_criterion_5_kpi_bounds(verdict):
    rng = np.random.default_rng(77)
    out_of_range = 0
    for _ in range(200):
        n = int(rng.integers(3, 2000))
        data = np.zeros((n, len(COLUMNS)))
        data[:, 0] = DT * np.arange(n)
        for c in ("x", "y", "heading", "v", "a_long", "a_lat", "steer", "s", "lane_dev"):
            data[:, COLUMNS.index(c)] = rng.normal(0, rng.uniform(1e-3, 50), n).cumsum() * rng.uniform(0, 1)
        k = compute_kpis(Trajectory(data), KpiRefs(), tuple(rng.normal(0, 20, 2)), float(rng.uniform(2.5, 4.5)))
        out_of_range += sum(not (0.0 <= s <= 1.0) for s in k.scores)
    arithmetic = normalize_kpi(2.0, 2.0) == 0.0 and normalize_kpi(0.0, 2.0) == 1.0 and normalize_kpi(1.0, 2.0) == 0.5
    verdict(5, out_of_range == 0 and arithmetic,
            f"200 random trajectories, {out_of_range} scores outside [0,1], reference arithmetic exact={arithmetic}")


def _pipeline(root):
    t0 = time.perf_counter()
    cmd_generate(stock_definitions_dir(), root)
    counts = cmd_simulate(root, parallel=1)
    cmd_evaluate(root)
    cmd_report(root)
    return time.perf_counter() - t0, counts


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for pattern in ("results/*/result.json", "results/*/kpi.json") for p in sorted(root.glob(pattern))}


@pytest.mark.slow
def test_criterion_6_campaign(verdict, tmp_path):
    n_scen = sum(ls.variant_count for ls in load_definitions(stock_definitions_dir()))
    t1, counts = _pipeline(tmp_path / "a")
    t2, _ = _pipeline(tmp_path / "b")
    a, b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "b")
    identical = a == b and len(a) == 2 * n_scen
    report = (tmp_path / "a" / "spider.svg").exists() and (tmp_path / "a" / "summary.json").exists()
    ok = n_scen >= 1460 and max(t1, t2) < 600 and identical and report
    verdict(6, ok, f"{n_scen} scenarios, runs {t1:.0f} s / {t2:.0f} s, byte-identical={identical}, "
                   f"status {dict(sorted(counts.items()))}")


def test_criterion_7_trends(verdict):
    widths = [3.0, 3.25, 3.5, 3.75, 4.0]
    radii = list(np.linspace(50, 500, 10))
    sweep = radius_sweep(Template.CURVED_LEFT, widths, radii)
    crit = {c.lane_width: c.critical for c in sweep.critical()}
    trends = {w: sweep.trend(w) for w in widths}
    positive = all(v is not None and v > 0 for v in trends.values())
    exists = any(v is not None for v in crit.values())
    # no critical radius means the ADF never failed: the lowest possible value
    ordered = [crit[w] if crit[w] is not None else 0.0 for w in widths]
    non_increasing = all(a >= b for a, b in zip(ordered, ordered[1:]))
    ext = ", ".join(f"{r:.2f}" for r in sweep.extended) or "none"
    verdict(7, positive and exists and non_increasing,
            f"critical radius by width {crit}, spearman {({w: round(v, 3) for w, v in trends.items()})}, "
            f"downward extension to [{ext}] m")


def _graph(edges):
    vertices = tuple(sorted(edges))
    return RouteGraph(vertices, {v: edges[v] for v in vertices}, {v: 1.0 for v in vertices})


def test_criterion_8_planner(verdict):
    checked = mismatched = 0
    graphs = [e for n in range(1, 11) for e in random_graphs(n, seed=1000 + n, n_graphs=40)]
    for width, radius in ((3.5, 50.0), (3.0, 200.0)):
        g = build_route_graph(to_lanelets(gen_curved_road(width, radius)))
        graphs.append({v: g.edges[v] for v in g.vertices})
    for edges in graphs:
        g = _graph(edges)
        for s in g.vertices:
            for t in g.vertices:
                checked += 1
                expected = brute_force_shortest(edges, s, t)
                try:
                    got = shortest_lanelet_path(g, s, t)
                except PlanningFailed:
                    got = None
                if expected is None or got is None:
                    mismatched += (expected is None) != (got is None)
                elif got[0] != expected[0] or abs(got[1] - expected[1]) > 1e-9:
                    mismatched += 1
    verdict(8, mismatched == 0, f"{checked} start/target pairs on {len(graphs)} maps with <= 10 lanelets, "
                                f"{mismatched} disagreements with exhaustive enumeration")


MIRRORED = ("y", "heading", "a_lat", "steer", "lane_dev")


def test_criterion_9_mirror(verdict):
    worst_traj = worst_kpi = 0.0
    problems = []
    for width, radius in ((3.5, 30.0), (3.0, 80.0), (4.0, 150.0)):
        left = gen_curved_road(width, radius, "left")
        right = gen_curved_road(width, radius, "right")
        if not networks_close(reflect_network(left, flip_rule=False), right, 1e-9):
            problems.append(f"geometry w={width} R={radius}")
        # the right curve driven on the mirrored (left-hand traffic) lane is the exact reflection
        mirrored = reflect_network(left)
        end = left.roads[0].length - 5
        ra = simulate(left, to_lanelets(left), ScenarioConfig("l", "m", LanePosition("1", -1, 5.0), 0.0,
                                                             LanePosition("1", -1, end)))
        rb = simulate(mirrored, to_lanelets(mirrored), ScenarioConfig("r", "m", LanePosition("1", 1, 5.0), 0.0,
                                                                      LanePosition("1", 1, end)))
        if ra.status is not Status.SUCCESS or rb.status is not Status.SUCCESS or len(ra.trajectory) != len(rb.trajectory):
            problems.append(f"runs w={width} R={radius}: {ra.status.value}/{rb.status.value}")
            continue
        a, b = ra.trajectory.data, rb.trajectory.data
        for i, col in enumerate(COLUMNS):
            if col == "heading":
                d = np.abs([wrap(u + v) for u, v in zip(a[:, i], b[:, i])])
            elif col in MIRRORED:
                d = np.abs(a[:, i] + b[:, i])
            else:
                d = np.abs(a[:, i] - b[:, i])
            worst_traj = max(worst_traj, float(d.max()))
        ka = compute_kpis(ra.trajectory, KpiRefs(), ra.target, width)
        kb = compute_kpis(rb.trajectory, KpiRefs(), rb.target, width)
        worst_kpi = max(worst_kpi, max(abs(u - v) for u, v in zip(ka.scores, kb.scores)),
                        abs(ka.comfort_rms - kb.comfort_rms))
    ok = not problems and worst_traj < 1e-6 and worst_kpi < 1e-9
    verdict(9, ok, f"trajectory mirror error {worst_traj:.1e}, KPI difference {worst_kpi:.1e}, "
                   f"problems={problems or 'none'}")
