"""Styled copies of a dataset and seeded train/test splits."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.dataset.store import DatasetIOError, DatasetStore
from src.imaging.filters import StyleFilterSet
from src.imaging.image import RgbImage, read_png, write_png
from src.models.annotation import DatasetManifest, FaceRecord, ManifestStyle, Split
from src.utils.utils import get_worker_count

logger = logging.getLogger(__name__)


def transform_manifest_images(
    manifest: DatasetManifest,
    transform: Callable[[RgbImage], RgbImage],
    out_dir: Union[str, Path],
    style: ManifestStyle,
    name: str,
    operation: str,
) -> DatasetManifest:
    """
    Write transform(image) for every record into out_dir, keeping record order,
    relative image paths and annotations unchanged.

    Raises:
        DatasetIOError: listing every record whose image could not be read or written
    """
    out_dir = Path(out_dir)

    def _one(record: FaceRecord) -> Optional[str]:
        try:
            image = read_png(manifest.image_path(record))
            write_png(transform(image), out_dir / record.image_path)
        except OSError as e:
            return f"{type(e).__name__}: {e}"
        return None

    with ThreadPoolExecutor(max_workers=get_worker_count()) as pool:
        outcomes = list(
            tqdm(pool.map(_one, manifest.records), total=len(manifest.records), desc=operation, disable=None)
        )
    failures = [(r.record_id, reason) for r, reason in zip(manifest.records, outcomes) if reason is not None]
    if failures:
        raise DatasetIOError(operation, failures)

    styled = DatasetManifest(
        name=name,
        split=manifest.split,
        style=style,
        num_landmarks=manifest.num_landmarks,
        records=list(manifest.records),
    )
    return styled.with_root(out_dir)


def generate_styled_dataset(
    manifest: DatasetManifest,
    filters: Optional[StyleFilterSet] = None,
    out_root: Optional[Union[str, Path]] = None,
) -> Dict[str, DatasetManifest]:
    """
    Apply each photo-style filter to every image of a manifest.

    Args:
        manifest: source dataset
        filters: named filters; defaults to Light, Gray and Sketch
        out_root: dataset root; each styled copy goes to <out_root>/<style>/<split>/

    Returns:
        One manifest per filter, keyed by style name
    """
    filters = filters or StyleFilterSet()
    store = DatasetStore(out_root)
    styled: Dict[str, DatasetManifest] = {}
    for style_name, style_filter in filters:
        style = ManifestStyle(style_name.value)
        target = store.manifest_dir(style, manifest.split)
        logger.info(f"Writing {style.value} copy of {manifest.name} ({len(manifest.records)} records) to {target}")
        result = transform_manifest_images(
            manifest,
            style_filter,
            target,
            style=style,
            name=f"{manifest.name}-{style.value}",
            operation=f"stylize {style.value}",
        )
        store.write(result)
        styled[style.value] = result
    return styled


def split_dataset(
    manifest: DatasetManifest, train_fraction: float, seed: int
) -> Tuple[DatasetManifest, DatasetManifest]:
    """Seeded shuffle, then the first round(fraction * n) records become the train split."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = np.random.default_rng(seed).permutation(len(manifest.records))
    n_train = int(round(train_fraction * len(order)))

    def _part(indices: np.ndarray, split: Split) -> DatasetManifest:
        records: List[FaceRecord] = [manifest.records[i] for i in indices]
        part = DatasetManifest(
            name=f"{manifest.name}-{split.value}",
            split=split,
            style=manifest.style,
            num_landmarks=manifest.num_landmarks,
            records=records,
        )
        return part.with_root(manifest.root)

    return _part(order[:n_train], Split.TRAIN), _part(order[n_train:], Split.TEST)
