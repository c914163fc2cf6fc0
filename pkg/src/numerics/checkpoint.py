"""
Parameter checkpoints: a versioned JSON container mapping parameter names to
shape + base64 of little-endian float32 values.
"""

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import numpy as np

from src.numerics.layers import Module
from src.utils.utils import atomic_write_text

CHECKPOINT_FORMAT = "sanlite-checkpoint"
CHECKPOINT_VERSION = 1
_WIRE_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)


def encode_checkpoint(state: Mapping[str, np.ndarray], metadata: Mapping[str, Any] = None) -> str:
    params = {}
    for name in sorted(state):
        array = np.ascontiguousarray(np.asarray(state[name]), dtype=_WIRE_DTYPE)
        params[name] = {
            "shape": list(array.shape),
            "data": base64.b64encode(array.tobytes()).decode("ascii"),
        }
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "metadata": dict(metadata or {}),
        "params": params,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def decode_checkpoint(text: str) -> Checkpoint:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"Checkpoint is not valid JSON: {e}")
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"Not a {CHECKPOINT_FORMAT} file (format={payload.get('format')!r})")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"Unsupported checkpoint version {payload.get('version')!r}")
    params = {}
    for name, entry in payload["params"].items():
        raw = base64.b64decode(entry["data"])
        shape = tuple(entry["shape"])
        array = np.frombuffer(raw, dtype=_WIRE_DTYPE)
        if array.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"Checkpoint entry {name} has {array.size} values for shape {shape}")
        params[name] = array.reshape(shape).astype(np.float32)
    return Checkpoint(params=params, metadata=payload.get("metadata", {}))


def save_checkpoint(
    source: Union[Module, Mapping[str, np.ndarray]],
    path: Union[str, Path],
    metadata: Mapping[str, Any] = None,
) -> Path:
    state = source.state_dict() if isinstance(source, Module) else source
    path = Path(path)
    atomic_write_text(path, encode_checkpoint(state, metadata))
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    return decode_checkpoint(Path(path).read_text(encoding="utf-8"))


def load_into(module: Module, path: Union[str, Path]) -> Checkpoint:
    checkpoint = load_checkpoint(path)
    module.load_state_dict(checkpoint.params)
    return checkpoint
