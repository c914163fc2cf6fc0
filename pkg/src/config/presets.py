"""
Named config presets and layered pipeline config loading.

Precedence, lowest first: preset defaults, JSON config file, explicit overrides
(CLI flags).
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import ValidationError

from src.models.configs import PipelineConfig

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised when a pipeline config cannot be parsed or fails validation."""


DESK_PRESET: Dict[str, Any] = {}

# Full-scale training settings; slow on CPU
PAPER_PRESET: Dict[str, Any] = {
    "cycle": {"batch_size": 32, "lr": 2e-4},
    "detector": {
        "input_size": 256,
        "optimizer": "sgd",
        "momentum": 0.9,
        "lr": 5e-5,
        "lr_milestones": [30, 35, 40, 45],
        "lr_gamma": 0.5,
        "epochs": 50,
        "batch_size": 8,
        "weight_decay": 0.0005,
    },
}

PRESETS: Dict[str, Dict[str, Any]] = {"desk": DESK_PRESET, "paper": PAPER_PRESET}


def preset_names():
    return sorted(PRESETS)


def deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}")
    if not isinstance(payload, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")
    return payload


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{key}: {item['msg']}")
    return "; ".join(parts)


def validate_config(payload: Mapping[str, Any]) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"Invalid pipeline config: {_describe(e)}")


def load_pipeline_config(
    preset: str = "desk",
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> PipelineConfig:
    """
    Build a validated PipelineConfig from a preset, an optional JSON file and overrides.

    Raises:
        ConfigError: unknown preset, unreadable file, or a schema violation naming the key
    """
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset {preset!r}; choose one of {preset_names()}")
    payload = copy.deepcopy(PRESETS[preset])
    if config_path is not None:
        payload = deep_merge(payload, read_config_file(config_path))
    if overrides:
        payload = deep_merge(payload, overrides)
    config = validate_config(payload)
    logger.debug(f"Loaded pipeline config (preset={preset}, file={config_path})")
    return config
