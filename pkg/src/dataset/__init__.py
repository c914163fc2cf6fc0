"""Dataset manifests, pts interop, synthetic faces and styled datasets"""

from .store import DatasetIOError, DatasetStore, ManifestError, read_manifest, write_manifest
from .pts import export_pts_sidecars, import_pts_directory, read_pts, write_pts
from .synth import generate_synthetic_dataset, synth_face
from .styled import generate_styled_dataset, split_dataset, transform_manifest_images

__all__ = [
    "DatasetIOError",
    "DatasetStore",
    "ManifestError",
    "read_manifest",
    "write_manifest",
    "read_pts",
    "import_pts_directory",
    "export_pts_sidecars",
    "write_pts",
    "generate_synthetic_dataset",
    "synth_face",
    "generate_styled_dataset",
    "split_dataset",
    "transform_manifest_images",
]
