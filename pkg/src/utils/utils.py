"""
Utility functions shared across the pipeline: seeding, worker counts, hashing
and atomic file writes.
"""

import hashlib
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np


def derive_seed(master_seed: int, name: str) -> int:
    """
    Derive a stable child seed from a master seed and a stage/cell name.

    Returns:
        A 32-bit seed that depends only on (master_seed, name)
    """
    digest = hashlib.sha256(f"{master_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def make_rng(master_seed: int, name: Optional[str] = None) -> np.random.Generator:
    seed = master_seed if name is None else derive_seed(master_seed, name)
    return np.random.default_rng(seed)


def get_worker_count(default: Optional[int] = None) -> int:
    """
    Get the worker cap from the SANLITE_THREADS environment variable.

    Returns:
        Worker count, at least 1
    """
    raw = os.getenv("SANLITE_THREADS")
    if raw is None or raw.strip() == "":
        return max(1, default or os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise EnvironmentError(f"SANLITE_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise EnvironmentError(f"SANLITE_THREADS must be >= 1, got {value}")
    return value


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_tree(root: Union[str, Path]) -> str:
    """Content hash of every file under root, independent of traversal order."""
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode("utf-8"))
        h.update(sha256_file(path).encode("ascii"))
    return h.hexdigest()


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        with_suppressed_unlink(tmp)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def with_suppressed_unlink(path: Union[str, Path]) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass
