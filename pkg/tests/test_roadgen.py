import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adftest.errors import DegenerateGeometryError, FormatError, InvalidCountError, RouteError
from adftest.geometry import validate_network
from adftest.lanelet import build_route_graph, reachable, to_lanelets
from adftest.roadgen import (
    LogicalScenario,
    ParamRange,
    Template,
    expand_logical,
    gen_complex,
    gen_curved_road,
    gen_t_junction,
    linspace_variants,
    load_definitions,
    logical_from_mapping,
    stock_definitions_dir,
)
from oracles import integrate_pose, wrap


def test_linspace_examples():
    assert linspace_variants(ParamRange("w", 3.0, 4.0), 5) == [3.0, 3.25, 3.5, 3.75, 4.0]
    assert linspace_variants(ParamRange("a", 35, 135, "deg"), 3) == [35, 85, 135]
    assert linspace_variants(ParamRange("g", 5, 5), 4) == [5, 5, 5, 5]
    assert linspace_variants(ParamRange("g", 2, 6), 1) == [4.0]
    with pytest.raises(InvalidCountError):
        linspace_variants(ParamRange("g", 5, 6), 0)
    with pytest.raises(ValueError):
        ParamRange("g", 6, 5)


@given(st.floats(-100, 100), st.floats(0, 100), st.integers(2, 300))
def test_linspace_properties(lo, span, n):
    vals = linspace_variants(ParamRange("p", lo, lo + span), n)
    assert len(vals) == n and vals == sorted(vals)
    assert vals[0] == lo and vals[-1] == lo + span


def test_curved_length():
    net = gen_curved_road(3.5, 100, "left", 50, 50, math.pi / 2)
    assert [s.kind for s in net.roads[0].segments] == ["line", "arc", "line"]
    assert net.roads[0].length == pytest.approx(100 + 50 * math.pi)
    assert validate_network(net) == []


def test_curved_examples():
    assert validate_network(gen_curved_road(4.0, 86, "left")) == []
    with pytest.raises(DegenerateGeometryError):
        gen_curved_road(3.0, 2, "left")


def test_t_junction_right_turn_radius():
    net = gen_t_junction(3.5, angle=90, gap=10)
    arms = {r.id: r for r in net.roads}
    for rid in ("1", "2", "3"):
        assert math.hypot(arms[rid].end_pose.x, arms[rid].end_pose.y) == pytest.approx(10)
    # every 90 degree fillet has reference radius = gap; the right-turn lane centre sits w/2 inside it
    radii = set()
    for c in net.junction("100").connections:
        road = arms[c.connecting_road]
        seg = road.segments[0]
        if seg.kind != "arc":
            continue
        r = 1 / abs(seg.curvature)
        assert r == pytest.approx(10.0)
        # lane -1 follows the road direction; it is inside the turn when the arc bends right
        inner = r - 3.5 / 2 if seg.curvature < 0 else r + 3.5 / 2
        radii.add(round(inner, 9))
    assert 8.25 in radii


def test_t_junction_fillet_tangency():
    net = gen_t_junction(3.5, angle=70, gap=12)
    roads = {r.id: r for r in net.roads}
    for c in net.junction("100").connections:
        conn = roads[c.connecting_road]
        seg = conn.segments[0]
        # integrate the connector numerically and compare with the arm it meets
        x, y, h = integrate_pose(seg.start.x, seg.start.y, seg.start.heading, seg.curvature, seg.length)
        other = roads[conn.successor.element_id].end_pose
        assert math.hypot(float(x) - other.x, float(y) - other.y) < 1e-8
        assert abs(wrap(float(h) - (other.heading + math.pi))) < 1e-9


def test_t_junction_boundary_angle():
    try:
        net = gen_t_junction(3.5, angle=35, gap=5)
    except DegenerateGeometryError as exc:
        assert "radius" in str(exc)
    else:
        assert validate_network(net) == []


def test_t_junction_collinear_warns():
    with pytest.warns(UserWarning):
        net = gen_t_junction(3.5, angle=180, gap=10)
    conns = [r for r in net.roads if r.junction]
    assert conns and all(s.curvature == 0 for r in conns for s in r.segments)


def test_complex_network():
    net = gen_complex(3.5, 100)
    assert len(net.roads) >= 4 and len(net.junctions) == 1
    assert validate_network(net) == []
    lmap = to_lanelets(net)
    graph = build_route_graph(lmap)
    target = lmap.find("4", -1)
    assert target in reachable(graph, lmap.find("3", -1))
    with pytest.raises(DegenerateGeometryError):
        gen_complex(3.5, 2)


def test_complex_length_additive():
    net = gen_complex(4.0, 500)
    assert validate_network(net) == []
    curve = net.road("4")
    assert curve.length == pytest.approx(50 + 50 + 500 * math.pi / 2)
    assert net.total_length == pytest.approx(sum(r.length for r in net.roads))


@given(st.floats(3.0, 4.5), st.floats(35, 135), st.floats(5, 30))
def test_generated_networks_valid_or_error(width, angle, gap):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            net = gen_t_junction(width, angle, gap)
        except DegenerateGeometryError:
            return
    assert validate_network(net) == []


@given(st.floats(3.0, 4.5), st.floats(1, 500), st.sampled_from(["left", "right"]))
def test_curved_valid_or_error(width, radius, direction):
    try:
        net = gen_curved_road(width, radius, direction)
    except DegenerateGeometryError:
        assert radius <= width
        return
    assert validate_network(net) == []


def _ls(**kw):
    base = dict(name="t", template=Template.CURVED_LEFT, varied=ParamRange("lane_width", 3.4, 4.5), variant_count=12,
                fixed={"radius": 150.0})
    base.update(kw)
    return LogicalScenario(**base)


def test_expand_lane_width():
    out = expand_logical(_ls())
    assert len(out) == 12 and all(c.ok for c in out)
    assert [c.id for c in out][:2] == ["t-0000", "t-0001"]
    assert all(c.params["radius"] == 150 for c in out)


def test_expand_gap():
    ls = _ls(template=Template.TJUNCTION_LEFT, varied=ParamRange("gap", 5, 30), variant_count=6, fixed={})
    assert [c.params["gap"] for c in expand_logical(ls)] == [5, 10, 15, 20, 25, 30]


def test_expand_failed_variant_isolated():
    ls = _ls(varied=ParamRange("radius", 2, 102), variant_count=3, fixed={"lane_width": 3.5})
    out = expand_logical(ls)
    assert [c.ok for c in out] == [False, True, True]
    assert "DegenerateGeometryError" in out[0].error


def test_expand_deterministic():
    a, b = expand_logical(_ls()), expand_logical(_ls())
    assert [(c.id, c.params) for c in a] == [(c.id, c.params) for c in b]


def test_logical_validation():
    with pytest.raises(ValueError):
        _ls(fixed={"lane_width": 3.0})
    with pytest.raises(ValueError):
        _ls(fixed={"wingspan": 3.0})


def test_route_resolution_errors():
    from adftest.roadgen import RouteSpec, resolve_route

    net = gen_curved_road(3.5, 100)
    with pytest.raises(RouteError):
        resolve_route(RouteSpec("9", -1, 5, "1", -1, "end"), net)
    with pytest.raises(RouteError):
        resolve_route(RouteSpec("1", -1, 5, "1", -1, 5000), net)
    r = resolve_route(RouteSpec("1", -1, 5, "1", -1, "end-5"), net)
    assert r.target.s == pytest.approx(net.roads[0].length - 5)


def test_definition_errors(tmp_path):
    with pytest.raises(FormatError):
        logical_from_mapping({"name": "x"}, "x.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [")
    with pytest.raises(FormatError, match="bad.toml"):
        load_definitions(tmp_path)


def test_stock_definitions():
    defs = load_definitions(stock_definitions_dir())
    assert len(defs) == 8
    assert {d.template for d in defs} == set(Template)
    total = sum(d.variant_count for d in defs)
    assert total >= 1460
