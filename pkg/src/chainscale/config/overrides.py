"""``key=value`` overrides layered on top of a scenario config."""

from __future__ import annotations

import tomllib
from collections.abc import Iterable
from typing import Any

from chainscale.config.scenario import ScenarioConfig, build_scenario
from chainscale.errors import ConfigError

# Mappings whose keys are data (module keys), not schema.
_OPEN_MAPPINGS = {("class_shares",), ("dependencies",)}


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``a.b=value`` and parse the value as a TOML literal.

    Values that are not valid TOML (bare words like ``weighted``) are kept as
    strings.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not key=value", field="set")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def merge_overrides(
    base: ScenarioConfig,
    overrides: dict[str, Any] | None,
) -> tuple[ScenarioConfig, list[str]]:
    """Merge a base config with a dotted-key override dict.

    Returns:
        (effective_config, overridden_fields)

    Raises:
        ConfigError: if a key names no config field, or the merged config
            fails validation.
    """
    if not overrides:
        return base, []

    model_data = base.model_dump(mode="json", exclude={"layout"})
    overridden_fields: list[str] = []
    for key, value in overrides.items():
        if key == "layout":
            model_data["layout"] = value
        else:
            _assign(model_data, key, value)
        overridden_fields.append(key)

    return build_scenario(model_data), overridden_fields


def apply_overrides(
    base: ScenarioConfig, texts: Iterable[str]
) -> tuple[ScenarioConfig, list[str]]:
    return merge_overrides(base, dict(parse_override(text) for text in texts))


def _assign(data: dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    target: Any = data
    for part in parts[:-1]:
        if not isinstance(target, dict) or part not in target:
            raise ConfigError(f"unknown config key {dotted!r}", field=dotted)
        target = target[part]

    leaf = parts[-1]
    if not isinstance(target, dict):
        raise ConfigError(f"unknown config key {dotted!r}", field=dotted)
    if leaf not in target and tuple(parts[:-1]) not in _OPEN_MAPPINGS:
        raise ConfigError(f"unknown config key {dotted!r}", field=dotted)
    target[leaf] = value
