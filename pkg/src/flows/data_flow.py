import logging
from typing import Dict

from src.dataset.store import ManifestError
from src.dataset.styled import generate_styled_dataset
from src.dataset.synth import generate_synthetic_dataset
from src.flows.layout import SPLITS, RunLayout
from src.models.annotation import DatasetManifest, ManifestStyle
from src.models.configs import PipelineConfig
from src.utils.utils import derive_seed

logger = logging.getLogger(__name__)


def synthesize_data(config: PipelineConfig, layout: RunLayout, seed: int) -> Dict[str, DatasetManifest]:
    """Render the train and test splits of the synthetic face dataset."""
    counts = {"train": config.data.train_count, "test": config.data.test_count}
    manifests = {}
    for split in SPLITS:
        out_dir = layout.data.manifest_dir(ManifestStyle.ORIGINAL, split)
        manifests[split] = generate_synthetic_dataset(
            config.data.synth,
            counts[split],
            derive_seed(seed, split),
            out_dir,
            split=split,
            name=f"synthetic-{split}",
        )
        logger.info(f"Synthetic {split} split: {counts[split]} faces in {out_dir}")
    return manifests


def read_original(layout: RunLayout, split: str) -> DatasetManifest:
    store = layout.data
    if not store.exists(ManifestStyle.ORIGINAL, split):
        raise ManifestError(
            f"No original {split} manifest under {store.root}; run synth-data first"
        )
    return store.read(ManifestStyle.ORIGINAL, split)


def stylize_data(layout: RunLayout) -> Dict[str, Dict[str, DatasetManifest]]:
    """Light, Gray and Sketch copies of both splits, keyed [split][style]."""
    styled = {}
    for split in SPLITS:
        styled[split] = generate_styled_dataset(read_original(layout, split), out_root=layout.data_dir)
    return styled


def read_style_sets(layout: RunLayout, split: str) -> Dict[str, DatasetManifest]:
    """The original set and its three styled copies for one split, keyed by style."""
    store = layout.data
    sets = {"original": read_original(layout, split)}
    for style in (ManifestStyle.LIGHT, ManifestStyle.GRAY, ManifestStyle.SKETCH):
        if not store.exists(style, split):
            raise ManifestError(f"No {style.value} {split} manifest under {store.root}; run stylize first")
        sets[style.value] = store.read(style, split)
    return sets
