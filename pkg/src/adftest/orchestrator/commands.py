"""Pipeline stages: generate, simulate, evaluate, report, verify."""
from __future__ import annotations

import fnmatch
import logging
import math
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from ..errors import AdfTestError, FormatError
from ..evaluation import KpiVector, aggregate_by_template, compute_kpis, critical_radius, kpi_radius_trend
from ..evaluation.kpi import SCORE_FIELDS
from ..lanelet import emit_osm, parse_osm, to_lanelets
from ..opendrive import emit_opendrive, parse_opendrive
from ..openscenario import XoscTemplate, instantiate_xosc, parse_xosc
from ..roadgen import DEFAULT_PARAMS, Template, expand_logical, load_definitions
from ..simulator import export_csv, parse_csv, simulate
from .config import ToolkitConfig
from .database import ManifestEntry, ScenarioDatabase, dumps, read_json, write_text
from .report import render_report, render_spider

log = logging.getLogger("adftest")

ERRORED = "Errored"


class StageError(AdfTestError):
    """A pipeline stage could not complete."""


def _matches(scenario_id: str, pattern: Optional[str]) -> bool:
    return pattern is None or fnmatch.fnmatchcase(scenario_id, pattern)


# ------------------------------------------------------------------ generate

def cmd_generate(definitions: Union[str, Path], db_root: Union[str, Path], cfg: Optional[ToolkitConfig] = None,
                 pattern: Optional[str] = None) -> ScenarioDatabase:
    cfg = cfg or ToolkitConfig()
    definitions = Path(definitions)
    if not definitions.exists():
        raise StageError(f"definitions path {definitions} does not exist")
    logicals = load_definitions(definitions)
    if not logicals:
        raise StageError(f"no logical scenarios found in {definitions}")
    db = ScenarioDatabase(db_root)
    try:
        db.root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError(f"cannot create database root {db.root}: {exc.strerror}") from None
    # scenarios are rebuilt from scratch so no stale directory survives a definition change
    shutil.rmtree(db.root / "scenarios", ignore_errors=True)
    template = XoscTemplate.load()
    entries = []
    for ls in logicals:
        for cs in expand_logical(ls):
            if not _matches(cs.id, pattern):
                continue
            entry = ManifestEntry(cs.id, ls.name, cs.template.value, cs.ok, cs.error)
            if cs.ok:
                try:
                    files = {
                        "map.xodr": emit_opendrive(cs.network, name=cs.id),
                        "map.osm": emit_osm(to_lanelets(cs.network), cfg.origin),
                        "scenario.xosc": instantiate_xosc(template, cs, map_file="map.xodr",
                                                          initial_speed=cfg.initial_speed,
                                                          attempt_limit=cfg.attempt_limit, timeout=cfg.timeout),
                        "params.json": dumps({
                            "id": cs.id, "logical": ls.name, "template": cs.template.value,
                            "params": {**DEFAULT_PARAMS[cs.template], **cs.params},
                            "varied": ls.varied.name,
                            "route": {"start": [cs.route.start.road, cs.route.start.lane, cs.route.start.s],
                                      "target": [cs.route.target.road, cs.route.target.lane, cs.route.target.s]},
                        }),
                    }
                except AdfTestError as exc:
                    entry = ManifestEntry(cs.id, ls.name, cs.template.value, False, f"{type(exc).__name__}: {exc}")
                else:
                    d = db.scenario_dir(entry)
                    for name, text in files.items():
                        write_text(d / name, text)
            entries.append(entry)
    meta = {"definitions": [ls.name for ls in logicals], "origin": list(cfg.origin)}
    db.write_manifest(entries, meta)
    ok = sum(e.generated for e in entries)
    log.info("generated %d of %d scenarios", ok, len(entries))
    if ok == 0:
        raise StageError("no scenario could be generated")
    return db


# ------------------------------------------------------------------ simulate

@dataclass(frozen=True)
class _SimJob:
    root: str
    entry: ManifestEntry
    cfg: ToolkitConfig
    origin: tuple[float, float]


def _simulate_one(job: _SimJob) -> tuple[str, str]:
    db = ScenarioDatabase(job.root)
    entry, cfg = job.entry, job.cfg
    out = db.result_dir(entry.id)
    record = {"id": entry.id, "logical": entry.logical, "template": entry.template,
              "config_digest": cfg.sim_digest()}
    try:
        d = db.scenario_dir(entry)
        record["scenario_digest"] = db.scenario_digest(entry)
        scenario = parse_xosc((d / "scenario.xosc").read_text(encoding="utf-8"))
        net = parse_opendrive((d / scenario.map_file).read_text(encoding="utf-8"))
        lmap = parse_osm((d / "map.osm").read_text(encoding="utf-8"), job.origin)
        result = simulate(net, lmap, scenario, cfg.vehicle, cfg.adf, cfg.dt)
    except (OSError, ValueError, AdfTestError) as exc:
        record.update(status=ERRORED, attempts_used=0, failure_detail=f"{type(exc).__name__}: {exc}",
                      samples=0, target=None, final_distance=None)
        (out / "trajectory.csv").unlink(missing_ok=True)
        write_text(out / "result.json", dumps(record))
        return entry.id, ERRORED
    record.update(status=result.status.value, attempts_used=result.attempts_used,
                  failure_detail=result.failure_detail, samples=len(result.trajectory),
                  target=list(result.target) if result.target else None,
                  final_distance=result.final_distance)
    write_text(out / "trajectory.csv", export_csv(result.trajectory))
    write_text(out / "result.json", dumps(record))
    return entry.id, result.status.value


def _up_to_date(db: ScenarioDatabase, entry: ManifestEntry, cfg: ToolkitConfig) -> bool:
    path = db.result_dir(entry.id) / "result.json"
    if not path.exists():
        return False
    try:
        rec = read_json(path)
        return rec.get("config_digest") == cfg.sim_digest() and rec.get("scenario_digest") == db.scenario_digest(entry)
    except (OSError, ValueError):
        return False


def cmd_simulate(db_root: Union[str, Path], cfg: Optional[ToolkitConfig] = None, force: bool = False,
                 pattern: Optional[str] = None, parallel: Optional[int] = None) -> dict[str, int]:
    cfg = cfg or ToolkitConfig()
    db = ScenarioDatabase(db_root)
    try:
        entries, meta = db.read_manifest()
    except (FileNotFoundError, ValueError) as exc:
        raise StageError(str(exc)) from None
    origin = tuple(meta.get("origin", cfg.origin))
    todo = [e for e in entries if e.generated and _matches(e.id, pattern)]
    jobs = [_SimJob(str(db.root), e, cfg, origin) for e in todo if force or not _up_to_date(db, e, cfg)]
    log.info("simulating %d scenarios (%d up to date)", len(jobs), len(todo) - len(jobs))
    workers = parallel or cfg.parallel
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_simulate_one, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        for job in jobs:
            _simulate_one(job)
    counts: dict[str, int] = {}
    for e in sorted(todo, key=lambda e: e.id):
        path = db.result_dir(e.id) / "result.json"
        status = read_json(path)["status"] if path.exists() else ERRORED
        counts[status] = counts.get(status, 0) + 1
    write_text(db.root / "results" / "simulation.json", dumps({"status_counts": counts, "scenarios": len(todo)}))
    return counts


# ------------------------------------------------------------------ evaluate

def _evaluate_one(db: ScenarioDatabase, entry: ManifestEntry, cfg: ToolkitConfig) -> Optional[dict]:
    out = db.result_dir(entry.id)
    rpath = out / "result.json"
    if not rpath.exists():
        return None
    result = read_json(rpath)
    params = read_json(db.scenario_dir(entry) / "params.json") if db.scenario_dir(entry).exists() else None
    record = {"id": entry.id, "logical": entry.logical, "template": entry.template, "status": result["status"],
              "params": params["params"] if params else None, "kpi": None, "reason": None}
    tpath = out / "trajectory.csv"
    if not tpath.exists():
        record["reason"] = "no trajectory"
        log.warning("%s: trajectory missing, KPIs skipped", entry.id)
    else:
        try:
            traj = parse_csv(tpath.read_text(encoding="utf-8"))
            kpi = compute_kpis(traj, cfg.refs, tuple(result["target"]), float(params["params"]["lane_width"]),
                               cfg.dt)
            record["kpi"] = kpi.to_dict()
        except (AdfTestError, ValueError, TypeError) as exc:
            record["reason"] = f"{type(exc).__name__}: {exc}"
            log.warning("%s: KPIs skipped (%s)", entry.id, exc)
    write_text(out / "kpi.json", dumps(record))
    return record


def _radius_analyses(records: list[dict], varied: dict[str, str]) -> list[dict]:
    out = []
    by_logical: dict[str, list[dict]] = {}
    for r in records:
        by_logical.setdefault(r["logical"], []).append(r)
    for logical in sorted(by_logical):
        rows = by_logical[logical]
        if varied.get(logical) != "radius" or Template(rows[0]["template"]).family != "curved":
            continue
        sweep = sorted((r["params"]["radius"], r["params"]["lane_width"], r["status"]) for r in rows)
        ok = sorted((r["params"]["radius"], KpiVector.from_dict(r["kpi"])) for r in rows
                    if r["status"] == "Success" and r["kpi"] is not None)
        try:
            trend = kpi_radius_trend(ok)
        except AdfTestError:
            trend = None
        out.append({"logical": logical, "template": rows[0]["template"],
                    "critical_radius": [c.to_dict() for c in critical_radius(sweep)], "kpi_radius_spearman": trend})
    return out


def cmd_evaluate(db_root: Union[str, Path], cfg: Optional[ToolkitConfig] = None,
                 pattern: Optional[str] = None) -> dict:
    cfg = cfg or ToolkitConfig()
    db = ScenarioDatabase(db_root)
    try:
        entries, _ = db.read_manifest()
    except (FileNotFoundError, ValueError) as exc:
        raise StageError(str(exc)) from None
    records, varied = [], {}
    for entry in sorted(entries, key=lambda e: e.id):
        if not entry.generated or not _matches(entry.id, pattern):
            continue
        rec = _evaluate_one(db, entry, cfg)
        if rec is None:
            log.warning("%s: no result, skipped", entry.id)
            continue
        records.append(rec)
        if entry.logical not in varied:
            params_path = db.scenario_dir(entry) / "params.json"
            varied[entry.logical] = read_json(params_path).get("varied") if params_path.exists() else None
    if not records:
        raise StageError("no simulation results to evaluate")
    aggregates = aggregate_by_template(
        (r["template"], r["status"] == "Success", KpiVector.from_dict(r["kpi"]) if r["kpi"] else None)
        for r in records)
    counts: dict[str, int] = {}
    for r in records:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    summary = {
        "axes": list(SCORE_FIELDS),
        "scenario_count": len(records),
        "status_counts": counts,
        "templates": [a.to_dict() for a in aggregates],
        "radius_sweeps": _radius_analyses(records, varied),
        "evaluated": [r["id"] for r in records],
    }
    write_text(db.summary_path, dumps(summary))
    return summary


# ------------------------------------------------------------------ report

def cmd_report(db_root: Union[str, Path]) -> tuple[Path, Path]:
    db = ScenarioDatabase(db_root)
    if not db.summary_path.exists():
        raise StageError(f"no summary at {db.summary_path}; run 'evaluate' first")
    try:
        summary = read_json(db.summary_path)
    except ValueError as exc:
        raise StageError(f"corrupt summary: {exc}") from None
    svg, txt = db.root / "spider.svg", db.root / "report.txt"
    write_text(svg, render_spider(summary))
    write_text(txt, render_report(summary))
    return svg, txt


# ------------------------------------------------------------------ verify

def cmd_verify(db_root: Union[str, Path]) -> list[str]:
    """Consistency problems between manifest, scenario directories and results; empty when sound."""
    db = ScenarioDatabase(db_root)
    try:
        entries, _ = db.read_manifest()
    except (FileNotFoundError, ValueError) as exc:
        return [str(exc)]
    problems = []
    known = {e.id: e for e in entries}
    for e in entries:
        d = db.scenario_dir(e)
        if e.generated:
            problems += [f"{e.id}: missing {name}" for name in ("map.xodr", "map.osm", "scenario.xosc", "params.json")
                         if not (d / name).is_file()]
        elif d.exists():
            problems.append(f"{e.id}: directory present for a failed generation")
    base = db.root / "scenarios"
    if base.is_dir():
        for logical_dir in sorted(p for p in base.iterdir() if p.is_dir()):
            for d in sorted(p for p in logical_dir.iterdir() if p.is_dir()):
                e = known.get(d.name)
                if e is None or e.logical != logical_dir.name:
                    problems.append(f"{d.relative_to(db.root)}: not listed in the manifest")
    for rid in db.result_ids():
        out = db.result_dir(rid)
        if rid not in known:
            problems.append(f"results/{rid}: not listed in the manifest")
        has_result, has_kpi = (out / "result.json").exists(), (out / "kpi.json").exists()
        if has_kpi and not has_result:
            problems.append(f"results/{rid}: kpi.json without result.json")
        if has_result:
            try:
                status = read_json(out / "result.json").get("status")
            except ValueError:
                problems.append(f"results/{rid}: corrupt result.json")
                continue
            if status != ERRORED and not (out / "trajectory.csv").exists():
                problems.append(f"results/{rid}: trajectory.csv missing")
    if db.summary_path.exists():
        try:
            summary = read_json(db.summary_path)
            for rid in summary.get("evaluated", []):
                if not (db.result_dir(rid) / "kpi.json").exists():
                    problems.append(f"summary.json references {rid} without kpi.json")
        except ValueError:
            problems.append("summary.json is corrupt")
    return problems


__all__ = ["StageError", "cmd_evaluate", "cmd_generate", "cmd_report", "cmd_simulate", "cmd_verify", "FormatError"]
