from .commands import StageError, cmd_evaluate, cmd_generate, cmd_report, cmd_simulate, cmd_verify
from .config import ToolkitConfig, config_from_mapping, default_config_text, load_config
from .database import ManifestEntry, ScenarioDatabase
from .sweep import SweepPoint, SweepResult, radius_sweep

__all__ = [
    "ManifestEntry", "ScenarioDatabase", "StageError", "SweepPoint", "SweepResult", "ToolkitConfig", "cmd_evaluate",
    "cmd_generate", "cmd_report", "cmd_simulate", "cmd_verify", "config_from_mapping", "default_config_text",
    "load_config", "radius_sweep",
]
