"""Toolkit configuration: a TOML file whose every section is optional.

```toml
[simulation]      # dt, attempt_limit, timeout, initial_speed
[vehicle]         # VehicleParams fields
[adf]             # AdfParams fields
[kpi]             # KpiRefs fields
[campaign]        # parallel
[map]             # origin_lat, origin_lon
```
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from ..errors import ConfigError
from ..evaluation import KpiRefs
from ..lanelet import DEFAULT_ORIGIN
from ..simulator import AdfParams, VehicleParams

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class ToolkitConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    adf: AdfParams = field(default_factory=AdfParams)
    refs: KpiRefs = field(default_factory=KpiRefs)
    dt: float = 0.01
    attempt_limit: int = 3
    timeout: float = 180.0
    initial_speed: float = 0.0
    parallel: int = 1
    origin: tuple[float, float] = DEFAULT_ORIGIN

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("simulation.dt must be > 0")
        if int(self.attempt_limit) != self.attempt_limit or self.attempt_limit < 1:
            raise ConfigError("simulation.attempt_limit must be an integer >= 1")
        if not (math.isfinite(self.timeout) and self.timeout > 0):
            raise ConfigError("simulation.timeout must be > 0")
        if not (math.isfinite(self.initial_speed) and self.initial_speed >= 0):
            raise ConfigError("simulation.initial_speed must be >= 0")
        if int(self.parallel) != self.parallel or self.parallel < 1:
            raise ConfigError("campaign.parallel must be an integer >= 1")
        lat, lon = self.origin
        if not (-90 < lat < 90 and -180 <= lon <= 180):
            raise ConfigError(f"map origin {self.origin} out of range")

    def to_dict(self) -> dict:
        return {
            "simulation": {"dt": self.dt, "attempt_limit": self.attempt_limit, "timeout": self.timeout,
                           "initial_speed": self.initial_speed},
            "vehicle": asdict(self.vehicle),
            "adf": asdict(self.adf),
            "kpi": asdict(self.refs),
            "campaign": {"parallel": self.parallel},
            "map": {"origin_lat": self.origin[0], "origin_lon": self.origin[1]},
        }

    def sim_digest(self) -> str:
        """Hash of everything that influences a simulation outcome (not parallelism)."""
        d = self.to_dict()
        payload = {k: d[k] for k in ("simulation", "vehicle", "adf")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


_SECTIONS = {
    "simulation": {"dt", "attempt_limit", "timeout", "initial_speed"},
    "vehicle": {f.name for f in fields(VehicleParams)},
    "adf": {f.name for f in fields(AdfParams)},
    "kpi": {f.name for f in fields(KpiRefs)},
    "campaign": {"parallel"},
    "map": {"origin_lat", "origin_lon"},
}
_INTEGER_KEYS = {"attempt_limit", "parallel"}


def _check_types(section: str, table: dict, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: [{section}] must be a table")
    unknown = sorted(set(table) - _SECTIONS[section])
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) in [{section}]: {', '.join(unknown)}")
    for key, value in table.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: {section}.{key} must be a number, got {value!r}")
        if key in _INTEGER_KEYS and not isinstance(value, int):
            raise ConfigError(f"{where}: {section}.{key} must be an integer")


def config_from_mapping(data: dict, where: str = "<config>") -> ToolkitConfig:
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"{where}: unknown section(s): {', '.join(unknown)}")
    for section, table in data.items():
        _check_types(section, table, where)
    sim = data.get("simulation", {})
    mp = data.get("map", {})
    try:
        return ToolkitConfig(
            vehicle=VehicleParams(**{k: float(v) for k, v in data.get("vehicle", {}).items()}),
            adf=AdfParams(**{k: float(v) for k, v in data.get("adf", {}).items()}),
            refs=KpiRefs(**{k: float(v) for k, v in data.get("kpi", {}).items()}),
            dt=float(sim.get("dt", 0.01)),
            attempt_limit=int(sim.get("attempt_limit", 3)),
            timeout=float(sim.get("timeout", 180.0)),
            initial_speed=float(sim.get("initial_speed", 0.0)),
            parallel=int(data.get("campaign", {}).get("parallel", 1)),
            origin=(float(mp.get("origin_lat", DEFAULT_ORIGIN[0])), float(mp.get("origin_lon", DEFAULT_ORIGIN[1]))),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path: Union[str, Path, None]) -> ToolkitConfig:
    if path is None:
        return ToolkitConfig()
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(data, str(path))


def default_config_text(cfg: Optional[ToolkitConfig] = None) -> str:
    """The configuration as TOML text (every key spelled out)."""
    cfg = cfg or ToolkitConfig()
    lines = []
    for section, table in cfg.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in table.items():
            if value is None:
                lines.append(f"# {key} unset")
            else:
                lines.append(f"{key} = {value!r}")
        lines.append("")
    return "\n".join(lines)
