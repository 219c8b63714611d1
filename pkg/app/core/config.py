from __future__ import annotations

import math
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.errors import InvalidConfig, IoFailure
from app.schemas.channel import ChannelConfig
from app.schemas.modem import ModemConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="MODEM_", case_sensitive=False, extra="ignore")

    # Transmission log
    log_path: str = Field(default="data/transmissions.jsonl")

    # Default key=value file layered under command-line flags
    config_file: str = Field(default="")

    # HTTP service
    api_host: str = Field(default="0.0.0.0")
    api_port: int = Field(default=8000)

    # Benchmark
    bench_workers: int = Field(default=1, ge=1)


@lru_cache()
def get_settings() -> Settings:
    return Settings()


# Config-file keys that target the channel although the name alone would not say so.
CHANNEL_ALIASES = {
    "drop_prob": "frame_drop_prob",
    "vad": "vad_enabled",
    "channel_frame_ms": "frame_ms",
}

_INFINITY = {"inf", "+inf", "infinity", "+infinity"}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_key_values(lines: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    """Parse `key = value` lines; blank lines and `#` comments are skipped."""
    values: Dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise InvalidConfig(f"{source}:{number}: expected key=value, got {raw.rstrip()!r}")
        values[normalize_key(key)] = value.strip()
    return values


def read_config_file(path: str | Path) -> Dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config file {path}: {exc}") from exc
    return parse_key_values(text.splitlines(), source=str(path))


def _coerce(value: Any) -> Any:
    if isinstance(value, str) and value.strip().lower() in _INFINITY:
        return math.inf
    return value


def split_config(values: Mapping[str, Any]) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Route flat keys to ModemConfig or ChannelConfig fields."""
    modem: Dict[str, Any] = {}
    channel: Dict[str, Any] = {}
    for raw_key, value in values.items():
        key = normalize_key(raw_key)
        if key in CHANNEL_ALIASES:
            channel[CHANNEL_ALIASES[key]] = _coerce(value)
        elif key in ModemConfig.model_fields:
            modem[key] = _coerce(value)
        elif key in ChannelConfig.model_fields:
            channel[key] = _coerce(value)
        else:
            raise InvalidConfig(f"unknown configuration key {raw_key!r}")
    return modem, channel


def build_configs(*layers: Optional[Mapping[str, Any]]) -> Tuple[ModemConfig, ChannelConfig]:
    """Merge layers left to right (later wins) on top of the built-in defaults."""
    modem: Dict[str, Any] = {}
    channel: Dict[str, Any] = {}
    for layer in layers:
        if not layer:
            continue
        layer_modem, layer_channel = split_config({k: v for k, v in layer.items() if v is not None})
        modem.update(layer_modem)
        channel.update(layer_channel)
    try:
        return ModemConfig(**modem), ChannelConfig(**channel)
    except ValidationError as exc:
        raise InvalidConfig(f"invalid configuration: {exc}") from exc


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value.value if isinstance(value, Enum) else value)


def dump_config(modem: ModemConfig, channel: ChannelConfig) -> str:
    lines = [f"{key} = {_format(value)}" for key, value in modem.model_dump().items()]
    for key, value in channel.model_dump().items():
        name = "channel_frame_ms" if key == "frame_ms" else key
        lines.append(f"{name} = {_format(value)}")
    return "\n".join(lines) + "\n"
