"""Configuration file loading and defaults for the CLI.

Precedence per setting: command-line flag > environment variable >
config file > built-in default. The config file is a flat JSON object;
unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError, SchemaViolation
from .model import DeviceProfile

ENV_BRIDGE = "TRACEREPLAY_BRIDGE"
ENV_OUT_DIR = "TRACEREPLAY_OUT_DIR"

DEVICE_PRESETS = {
    "nexus5": DeviceProfile(name="nexus5", screen_width=1080,
                            screen_height=1920, fps=30),
    "nexus6p": DeviceProfile(name="nexus6p", screen_width=1440,
                             screen_height=2560, fps=30),
}


@dataclass
class Config:
    device: str = "nexus5"  # preset name; full profiles come from inputs
    bridge_path: str = "adb"
    device_serial: str | None = None
    agent_path: str | None = None
    remote_dir: str = "/data/local/tmp"
    device_node: str = "/dev/input/event2"
    noise_preset: str = "clean"
    seed: int = 0
    out_dir: str = "out"
    min_confidence: float = 0.7
    extended_alphabet: bool = False
    duration_based_cutoff: bool = False

    def profile(self) -> DeviceProfile:
        if self.device not in DEVICE_PRESETS:
            raise ConfigError(
                f"unknown device preset {self.device!r}; "
                f"options: {sorted(DEVICE_PRESETS)}"
            )
        return DEVICE_PRESETS[self.device]


def load_config(path: str | None) -> Config:
    """Build a Config from an optional JSON file plus the environment."""
    config = Config()
    if path is not None:
        file = Path(path)
        if not file.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(file.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(Config)}
        for key, value in doc.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(config, key, value)
    if ENV_BRIDGE in os.environ:
        config.bridge_path = os.environ[ENV_BRIDGE]
    if ENV_OUT_DIR in os.environ:
        config.out_dir = os.environ[ENV_OUT_DIR]
    try:
        config.profile()
    except SchemaViolation as exc:
        raise ConfigError(str(exc)) from exc
    return config
