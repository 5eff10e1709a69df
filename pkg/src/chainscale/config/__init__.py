"""Configuration module for chainscale."""

from chainscale.config.overrides import apply_overrides, merge_overrides, parse_override
from chainscale.config.scenario import (
    PRESETS,
    ElectionMode,
    MaliciousStrategy,
    ScenarioConfig,
    ScenarioEvent,
    build_scenario,
    liveness_threshold,
    load_scenario,
)
from chainscale.config.settings import Settings, get_settings

__all__ = [
    "PRESETS",
    "ElectionMode",
    "MaliciousStrategy",
    "ScenarioConfig",
    "ScenarioEvent",
    "Settings",
    "apply_overrides",
    "build_scenario",
    "get_settings",
    "liveness_threshold",
    "load_scenario",
    "merge_overrides",
    "parse_override",
]
