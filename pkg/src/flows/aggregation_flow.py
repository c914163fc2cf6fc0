"""Style aggregation stages: cycle generator training and aggregated dataset export."""

import logging
from typing import Dict, Tuple

import numpy as np

from src.dataset.store import MANIFEST_FILENAME, ManifestError, read_manifest, write_manifest
from src.flows.data_flow import read_original, read_style_sets
from src.flows.discovery_flow import read_cluster_members
from src.flows.layout import SPLITS, STYLES, RunLayout
from src.imaging.image import read_png
from src.logic.aggregation import precompute_aggregated_manifest
from src.logic.cycle_gan import CycleTrainResult, Generator, train_cycle_generators
from src.models.annotation import DatasetManifest
from src.models.configs import CycleTrainConfig, PipelineConfig
from src.numerics.checkpoint import load_checkpoint, load_into, save_checkpoint
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)

G_TO_A_CHECKPOINT = "g_to_a.ckpt.json"
G_TO_B_CHECKPOINT = "g_to_b.ckpt.json"
TRAIN_LOG_CSV = "train_log.csv"


def train_generators(config: PipelineConfig, layout: RunLayout, seed: int) -> CycleTrainResult:
    """Train G_ab / G_ba between the two selected hidden-style clusters of the training split."""
    original = read_original(layout, "train")
    by_id = {r.record_id: r for r in original.records}
    members_a, members_b = read_cluster_members(layout)
    images_a = [read_png(original.image_path(by_id[i])) for i in members_a]
    images_b = [read_png(original.image_path(by_id[i])) for i in members_b]
    result = train_cycle_generators(images_a, images_b, config.cycle, seed)

    out_dir = layout.gan_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "config": config.cycle.model_dump(mode="json"),
        "initial_cycle_loss": result.initial_cycle_loss,
        "final_cycle_loss": result.final_cycle_loss,
        "cluster_sizes": [len(images_a), len(images_b)],
    }
    save_checkpoint(result.g_to_a, out_dir / G_TO_A_CHECKPOINT, metadata={**meta, "direction": "b->a"})
    save_checkpoint(result.g_to_b, out_dir / G_TO_B_CHECKPOINT, metadata={**meta, "direction": "a->b"})
    csv = result.log.to_frame().to_csv(index=False, float_format="%.8f", lineterminator="\n")
    atomic_write_text(out_dir / TRAIN_LOG_CSV, csv)
    return result


def _load_generator(path) -> Generator:
    meta = load_checkpoint(path).metadata
    generator = Generator(CycleTrainConfig.model_validate(meta["config"]), np.random.default_rng(0))
    load_into(generator, path)
    return generator


def load_generators(layout: RunLayout) -> Tuple[Generator, Generator]:
    """(g_to_a, g_to_b) restored from the gan checkpoints."""
    paths = [layout.gan_dir / G_TO_A_CHECKPOINT, layout.gan_dir / G_TO_B_CHECKPOINT]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise ManifestError(f"Missing generator checkpoints {missing}; run train-gan first")
    return _load_generator(paths[0]), _load_generator(paths[1])


def cycle_summary(layout: RunLayout) -> Dict[str, float]:
    meta = load_checkpoint(layout.gan_dir / G_TO_B_CHECKPOINT).metadata
    return {k: meta[k] for k in ("initial_cycle_loss", "final_cycle_loss")}


def aggregate_datasets(layout: RunLayout) -> Dict[str, Dict[str, DatasetManifest]]:
    """Aggregated copy of every style and split, keyed [style][split]."""
    g_to_a, g_to_b = load_generators(layout)
    aggregated: Dict[str, Dict[str, DatasetManifest]] = {}
    for split in SPLITS:
        for style, manifest in read_style_sets(layout, split).items():
            out_dir = layout.aggregated_split_dir(style, split)
            result = precompute_aggregated_manifest(manifest, g_to_a, g_to_b, out_dir)
            write_manifest(result, out_dir / MANIFEST_FILENAME)
            aggregated.setdefault(style, {})[split] = result
    return aggregated


def read_aggregated(layout: RunLayout, style: str, split: str) -> DatasetManifest:
    if style not in STYLES:
        raise ValueError(f"Unknown style {style!r}; expected one of {STYLES}")
    return read_manifest(layout.aggregated_split_dir(style, split) / MANIFEST_FILENAME)
