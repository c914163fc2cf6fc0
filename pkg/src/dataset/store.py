import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from src.config import settings
from src.models.annotation import DatasetManifest, ManifestStyle, Split
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.json"


class ManifestError(ValueError):
    """Raised when a manifest file is malformed or violates the schema."""


class DatasetIOError(IOError):
    """Raised when images for one or more records could not be read or written."""

    def __init__(self, operation: str, failures: Sequence[Tuple[str, str]]):
        self.operation = operation
        self.failures = list(failures)
        listed = "; ".join(f"{record_id}: {reason}" for record_id, reason in self.failures)
        super().__init__(f"{operation} failed for {len(self.failures)} record(s): {listed}")


def encode_manifest(manifest: DatasetManifest) -> str:
    return json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n"


def write_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """Write a manifest atomically; image paths resolve against the manifest's directory."""
    path = Path(path)
    atomic_write_text(path, encode_manifest(manifest))
    manifest.with_root(path.parent)
    return path


def read_manifest(path: Union[str, Path]) -> DatasetManifest:
    """
    Read and schema-validate a manifest.

    Raises:
        ManifestError: unreadable file, malformed JSON, missing fields or mixed K
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"Manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise ManifestError(f"Manifest {path} is not valid JSON: {e}")
    try:
        manifest = DatasetManifest.model_validate(payload)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ManifestError(f"Manifest {path} failed validation: {problems}")
    return manifest.with_root(path.parent)


class DatasetStore:
    """
    Manifests laid out as <root>/<style>/<split>/manifest.json with images beside them.
    """

    def __init__(self, root: Optional[Union[str, Path]] = None):
        """
        Args:
            root: Directory holding the datasets. If None, uses <SANLITE_OUTPUT_DIR>/data
        """
        self.root = Path(root) if root is not None else settings.OUTPUT_DIR / "data"

    def manifest_dir(self, style: Union[str, ManifestStyle], split: Union[str, Split]) -> Path:
        style = ManifestStyle(style)
        # synthetic-mixed data plays the original role in the layout
        if style is ManifestStyle.SYNTHETIC_MIXED:
            style = ManifestStyle.ORIGINAL
        return self.root / style.value / Split(split).value

    def manifest_path(self, style, split) -> Path:
        return self.manifest_dir(style, split) / MANIFEST_FILENAME

    def exists(self, style, split) -> bool:
        return self.manifest_path(style, split).is_file()

    def read(self, style, split) -> DatasetManifest:
        return read_manifest(self.manifest_path(style, split))

    def write(self, manifest: DatasetManifest) -> Path:
        return write_manifest(manifest, self.manifest_path(manifest.style, manifest.split))

    def list_manifests(self) -> List[Tuple[str, str]]:
        found = []
        for path in sorted(self.root.glob(f"*/*/{MANIFEST_FILENAME}")):
            found.append((path.parent.parent.name, path.parent.name))
        return found

    def get_manifest_info(self, style, split) -> Dict[str, Any]:
        try:
            manifest = self.read(style, split)
        except ManifestError as e:
            logger.error(f"Failed to read manifest {style}/{split}: {e}")
            return {}
        return {
            "name": manifest.name,
            "style": manifest.style.value,
            "split": manifest.split.value,
            "num_landmarks": manifest.num_landmarks,
            "record_count": len(manifest.records),
        }
