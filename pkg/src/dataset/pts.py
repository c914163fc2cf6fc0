"""
Converter for pts-style landmark sidecars:

    version: 1
    n_points: K
    {
    x y
    ...
    }

plus a directory importer that turns images with such sidecars into a manifest.
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from src.dataset.store import ManifestError, write_manifest
from src.models.annotation import DatasetManifest, FaceRecord, LandmarkAnnotation, ManifestStyle, Split
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)


def parse_pts(text: str) -> np.ndarray:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    header = {}
    body: List[str] = []
    inside = False
    for line in lines:
        if line == "{":
            inside = True
        elif line == "}":
            inside = False
        elif inside:
            body.append(line)
        elif ":" in line:
            key, value = line.split(":", 1)
            header[key.strip()] = value.strip()
    if "n_points" not in header:
        raise ManifestError("pts file is missing the n_points header")
    n_points = int(header["n_points"])
    if len(body) != n_points:
        raise ManifestError(f"pts header declares {n_points} points, body has {len(body)}")
    try:
        points = np.array([[float(v) for v in line.split()] for line in body], dtype=np.float64)
    except ValueError as e:
        raise ManifestError(f"pts body has a malformed coordinate: {e}")
    if points.shape != (n_points, 2):
        raise ManifestError(f"pts body must have two coordinates per line, got shape {points.shape}")
    return points


def format_pts(points: np.ndarray) -> str:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    lines = ["version: 1", f"n_points: {len(points)}", "{"]
    lines += [f"{x!r} {y!r}" for x, y in points.tolist()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_pts(path: Union[str, Path]) -> np.ndarray:
    return parse_pts(Path(path).read_text(encoding="utf-8"))


def write_pts(points: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    atomic_write_text(path, format_pts(points))
    return path


IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def landmark_box(points: np.ndarray, margin: float = 0.1) -> Tuple[float, float, float, float]:
    """Landmark bounding box grown by `margin` of its size on every side, at least one pixel wide."""
    x1, y1 = points.min(axis=0)
    x2, y2 = points.max(axis=0)
    pad_x = max(margin * (x2 - x1), 0.5)
    pad_y = max(margin * (y2 - y1), 0.5)
    return float(x1 - pad_x), float(y1 - pad_y), float(x2 + pad_x), float(y2 + pad_y)


def import_pts_directory(
    image_dir: Union[str, Path],
    name: str,
    split: Union[str, Split] = Split.TRAIN,
    margin: float = 0.1,
    manifest_name: str = "manifest.json",
) -> DatasetManifest:
    """
    Build a manifest from images that carry a pts sidecar with the same stem.

    Images without a sidecar are skipped with a warning. The face box is the landmark
    bounding box grown by `margin`. The manifest is written next to the images.

    Raises:
        ManifestError: nothing to import, or sidecars that disagree on K or fail to parse
    """
    image_dir = Path(image_dir)
    images = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    records: List[FaceRecord] = []
    for image in images:
        sidecar = image.with_suffix(".pts")
        if not sidecar.is_file():
            logger.warning(f"Skipping {image.name}: no pts sidecar")
            continue
        try:
            points = read_pts(sidecar)
        except ManifestError as e:
            raise ManifestError(f"{sidecar.name}: {e}")
        if records and len(points) != records[0].annotation.num_landmarks:
            raise ManifestError(
                f"{sidecar.name} has {len(points)} landmarks, "
                f"earlier sidecars have {records[0].annotation.num_landmarks}"
            )
        records.append(
            FaceRecord(
                record_id=image.stem,
                image_path=image.name,
                box=landmark_box(points, margin),
                annotation=LandmarkAnnotation.from_array(points),
            )
        )
    if not records:
        raise ManifestError(f"No images with pts sidecars in {image_dir}")

    manifest = DatasetManifest(
        name=name,
        split=Split(split),
        style=ManifestStyle.ORIGINAL,
        num_landmarks=records[0].annotation.num_landmarks,
        records=records,
    )
    write_manifest(manifest, image_dir / manifest_name)
    logger.info(f"Imported {len(records)} pts-annotated images from {image_dir} (skipped {len(images) - len(records)})")
    return manifest


def export_pts_sidecars(manifest: DatasetManifest) -> List[Path]:
    """Write a pts sidecar next to every image of the manifest."""
    return [
        write_pts(record.annotation.as_array(), manifest.image_path(record).with_suffix(".pts"))
        for record in manifest.records
    ]
