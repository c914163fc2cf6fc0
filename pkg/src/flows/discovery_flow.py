"""Style discovery stage: classifier training, feature clustering, cluster exports."""

import json
import logging
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from src.flows.data_flow import read_style_sets
from src.flows.layout import RunLayout
from src.imaging.image import read_png, write_png
from src.logic.kmeans import write_cluster_csv, write_cluster_model
from src.logic.style_classifier import StyleClassifier, train_style_classifier
from src.logic.style_discovery import DiscoveryResult, cluster_mean_faces, discover_hidden_styles
from src.models.configs import ClassifierConfig, PipelineConfig
from src.numerics.checkpoint import load_checkpoint, load_into, save_checkpoint
from src.utils.utils import atomic_write_text, derive_seed

logger = logging.getLogger(__name__)

CLASSIFIER_CHECKPOINT = "classifier.ckpt.json"
CLUSTERS_CSV = "clusters.csv"
CLUSTER_MODEL_JSON = "cluster_model.json"
SUMMARY_JSON = "discovery.json"


def discover_styles(config: PipelineConfig, layout: RunLayout, seed: int) -> DiscoveryResult:
    """
    Train the style classifier on the training split and its styled copies, then
    cluster the original training images by style feature.
    """
    sets = read_style_sets(layout, "train")
    original = sets.pop("original")
    trained = train_style_classifier(
        original, [sets[s] for s in ("light", "gray", "sketch")], config.classifier, derive_seed(seed, "classifier")
    )

    out_dir = layout.discovery_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        trained.model,
        out_dir / CLASSIFIER_CHECKPOINT,
        metadata={"config": config.classifier.model_dump(mode="json"), "num_classes": trained.model.num_classes},
    )

    images = [read_png(original.image_path(r)) for r in original.records]
    result = discover_hidden_styles(trained.model, original, config.kmeans, derive_seed(seed, "kmeans"), images)
    write_cluster_csv(result.model, out_dir / CLUSTERS_CSV)
    write_cluster_model(result.model, out_dir / CLUSTER_MODEL_JSON, result.pair)
    for index, face in enumerate(cluster_mean_faces(images, result.model)):
        write_png(face, out_dir / f"mean_face_{index}.png")

    summary = {
        "classifier_accuracy": trained.accuracy,
        "classifier_initial_loss": trained.initial_loss,
        "classifier_final_loss": trained.final_loss,
        "cluster_sizes": result.model.sizes.tolist(),
        "selected_pair": list(result.pair),
        "purity": result.purity,
    }
    atomic_write_text(out_dir / SUMMARY_JSON, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    logger.info(
        f"Discovery: classifier accuracy {trained.accuracy:.3f}, cluster sizes {result.model.sizes.tolist()}, "
        f"pair {result.pair}, purity {result.purity}"
    )
    return result


def load_classifier(layout: RunLayout) -> StyleClassifier:
    path = layout.discovery_dir / CLASSIFIER_CHECKPOINT
    meta = load_checkpoint(path).metadata
    model = StyleClassifier(
        ClassifierConfig.model_validate(meta["config"]), np.random.default_rng(0), num_classes=meta["num_classes"]
    )
    load_into(model, path)
    return model


def read_discovery_summary(layout: RunLayout) -> Dict[str, Any]:
    return json.loads((layout.discovery_dir / SUMMARY_JSON).read_text(encoding="utf-8"))


def read_cluster_members(layout: RunLayout) -> Tuple[List[str], List[str]]:
    """Record ids of the selected (a, b) cluster pair, read back from the discovery exports."""
    model = json.loads((layout.discovery_dir / CLUSTER_MODEL_JSON).read_text(encoding="utf-8"))
    pair = model["selected_pair"]
    frame = pd.read_csv(layout.discovery_dir / CLUSTERS_CSV, dtype={"record_id": str})
    members_a = frame.loc[frame["cluster_index"] == pair["a"], "record_id"].tolist()
    members_b = frame.loc[frame["cluster_index"] == pair["b"], "record_id"].tolist()
    return members_a, members_b
