"""On-disk scenario and results database.

Layout under the root::

    manifest.json
    scenarios/<logical>/<id>/{map.xodr, map.osm, scenario.xosc, params.json}
    results/<id>/{trajectory.csv, result.json, kpi.json}
    summary.json, spider.svg, report.txt
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

SCENARIO_FILES = ("map.xodr", "map.osm", "scenario.xosc", "params.json")
MANIFEST_VERSION = 1


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_text(path: Path, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see half a file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    logical: str
    template: str
    generated: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"id": self.id, "logical": self.logical, "template": self.template, "generated": self.generated,
                "error": self.error}


class ScenarioDatabase:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    # paths
    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def summary_path(self) -> Path:
        return self.root / "summary.json"

    def scenario_dir(self, entry: ManifestEntry) -> Path:
        return self.root / "scenarios" / entry.logical / entry.id

    def result_dir(self, scenario_id: str) -> Path:
        return self.root / "results" / scenario_id

    # manifest
    def write_manifest(self, entries: list[ManifestEntry], meta: dict) -> None:
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate scenario ids in manifest")
        write_text(self.manifest_path, dumps({"version": MANIFEST_VERSION, **meta,
                                              "scenarios": [e.to_dict() for e in entries]}))

    def read_manifest(self) -> tuple[list[ManifestEntry], dict]:
        if not self.manifest_path.exists():
            raise FileNotFoundError(f"no manifest at {self.manifest_path}; run 'generate' first")
        data = read_json(self.manifest_path)
        entries = [ManifestEntry(**e) for e in data.get("scenarios", [])]
        meta = {k: v for k, v in data.items() if k != "scenarios"}
        return entries, meta

    def generated(self) -> list[ManifestEntry]:
        return [e for e in self.read_manifest()[0] if e.generated]

    def scenario_digest(self, entry: ManifestEntry) -> str:
        h = hashlib.sha256()
        d = self.scenario_dir(entry)
        for name in SCENARIO_FILES:
            h.update(name.encode())
            h.update((d / name).read_bytes())
        return h.hexdigest()[:16]

    def result_ids(self) -> list[str]:
        base = self.root / "results"
        if not base.is_dir():
            return []
        return sorted(p.name for p in base.iterdir() if p.is_dir())
