"""Spider chart (SVG) and plain-text report rendered from summary.json."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

from ..evaluation.kpi import SCORE_FIELDS

SIZE = 520
RADIUS = 170.0
RINGS = (0.25, 0.5, 0.75, 1.0)
COLORS = {"curved": "#1f77b4", "t-junction": "#d62728", "complex": "#2ca02c"}
AXIS_LABELS = {
    "long_accel": "long. accel", "long_decel": "long. decel", "lat_accel": "lat. accel",
    "long_jerk": "long. jerk", "lat_jerk": "lat. jerk", "distance_target": "distance to target",
    "lane_keeping": "lane keeping", "oscillation": "oscillation",
}


def _f(x: float) -> str:
    return f"{x:.2f}"


def _point(k: int, n: int, value: float, cx: float, cy: float) -> tuple[float, float]:
    # axis 0 points up, the rest follow clockwise
    ang = -math.pi / 2 + 2 * math.pi * k / n
    return cx + RADIUS * value * math.cos(ang), cy + RADIUS * value * math.sin(ang)


def spider_polygons(summary: dict) -> list[tuple[str, list[tuple[float, float]]]]:
    """(template, vertices) for every template with successful runs, in summary order."""
    axes = summary.get("axes", list(SCORE_FIELDS))
    n = len(axes)
    cx = cy = SIZE / 2
    out = []
    for agg in summary["templates"]:
        if agg["means"] is None:
            continue
        pts = [_point(k, n, min(max(agg["means"][a], 0.0), 1.0), cx, cy) for k, a in enumerate(axes)]
        out.append((agg["template"], pts))
    return out


def render_spider(summary: dict) -> str:
    axes = summary.get("axes", list(SCORE_FIELDS))
    n = len(axes)
    cx = cy = SIZE / 2
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE + 40}" '
             f'viewBox="0 0 {SIZE} {SIZE + 40}" font-family="sans-serif" font-size="11">',
             f'<rect width="{SIZE}" height="{SIZE + 40}" fill="white"/>']
    for r in RINGS:
        ring = " ".join(f"{_f(x)},{_f(y)}" for x, y in (_point(k, n, r, cx, cy) for k in range(n)))
        lines.append(f'<polygon points="{ring}" fill="none" stroke="#ccc" stroke-width="1"/>')
    for k, axis in enumerate(axes):
        x, y = _point(k, n, 1.0, cx, cy)
        lines.append(f'<line x1="{_f(cx)}" y1="{_f(cy)}" x2="{_f(x)}" y2="{_f(y)}" stroke="#999" stroke-width="1"/>')
        lx, ly = _point(k, n, 1.13, cx, cy)
        anchor = "middle" if abs(lx - cx) < 1 else ("start" if lx > cx else "end")
        lines.append(f'<text x="{_f(lx)}" y="{_f(ly)}" text-anchor="{anchor}" class="axis">'
                     f'{escape(AXIS_LABELS.get(axis, axis))}</text>')
    for template, pts in spider_polygons(summary):
        color = COLORS.get(template, "#555")
        pts_s = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        lines.append(f'<polygon class="template" data-template="{escape(template)}" points="{pts_s}" '
                     f'fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="2"/>')
    y = SIZE + 10
    for i, agg in enumerate(a for a in summary["templates"] if a["means"] is not None):
        color = COLORS.get(agg["template"], "#555")
        x = 20 + 160 * i
        lines.append(f'<rect x="{x}" y="{y}" width="12" height="12" fill="{color}"/>')
        lines.append(f'<text x="{x + 18}" y="{y + 10}">{escape(agg["template"])} (n={agg["successes"]})</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_report(summary: dict) -> str:
    axes = summary.get("axes", list(SCORE_FIELDS))
    out = [f"scenarios evaluated: {summary['scenario_count']}"]
    out.append("status: " + ", ".join(f"{k}={v}" for k, v in sorted(summary["status_counts"].items())))
    out.append("")
    head = f"{'template':<12}{'count':>7}{'ok':>7}{'rate':>8}" + "".join(f"{a[:12]:>14}" for a in axes)
    out += [head, "-" * len(head)]
    for agg in summary["templates"]:
        row = f"{agg['template']:<12}{agg['count']:>7}{agg['successes']:>7}{agg['success_rate']:>8.3f}"
        if agg["means"] is None:
            row += "".join(f"{'n/a':>14}" for _ in axes)
        else:
            row += "".join(f"{agg['means'][a]:>14.4f}" for a in axes)
        out.append(row)
    out.append("")
    for agg in summary["templates"]:
        if agg["mean_comfort_rms"] is not None:
            out.append(f"{agg['template']}: mean comfort rms {agg['mean_comfort_rms']:.4f} m/s^2")
    for sweep in summary.get("radius_sweeps", []):
        out.append("")
        out.append(f"radius sweep {sweep['logical']} ({sweep['template']})")
        for c in sweep["critical_radius"]:
            crit = "none" if c["critical"] is None else f"{c['critical']:.2f} m"
            note = "" if c["monotone"] else " (non-monotone)"
            out.append(f"  lane width {c['lane_width']:.3f} m: critical radius {crit}{note}")
        rho = sweep["kpi_radius_spearman"]
        out.append("  kpi/radius spearman: " + ("n/a" if rho is None else f"{rho:.4f}"))
    return "\n".join(out) + "\n"
