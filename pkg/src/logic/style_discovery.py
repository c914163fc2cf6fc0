import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.imaging.image import RgbImage, read_png
from src.logic.kmeans import cluster_purity, kmeans_cluster, select_cluster_pair
from src.logic.style_classifier import StyleClassifier, extract_style_features
from src.models.annotation import DatasetManifest
from src.models.configs import KMeansConfig
from src.models.reports import ClusterModel

logger = logging.getLogger(__name__)


@dataclass
class DiscoveryResult:
    """Hidden-style clusters of a dataset and the pair selected for generator training"""

    model: ClusterModel
    pair: Tuple[int, int]
    purity: Optional[float] = None  # against style tags, when every record has one

    @property
    def cluster_a(self) -> np.ndarray:
        return self.model.members(self.pair[0])

    @property
    def cluster_b(self) -> np.ndarray:
        return self.model.members(self.pair[1])


def cluster_mean_faces(images: Sequence[RgbImage], model: ClusterModel) -> List[RgbImage]:
    """Pixelwise mean image of each cluster; an empty cluster yields a black image."""
    if len(images) != len(model.assignments):
        raise ValueError(f"{len(images)} images for {len(model.assignments)} cluster assignments")
    stack = np.stack([img.pixels for img in images]).astype(np.float64)
    means = []
    for j in range(model.k):
        members = stack[model.assignments == j]
        means.append(RgbImage(members.mean(axis=0) if len(members) else np.zeros(stack.shape[1:])))
    return means


def discover_hidden_styles(
    classifier: StyleClassifier,
    manifest: DatasetManifest,
    config: KMeansConfig,
    seed: int,
    images: Optional[Sequence[RgbImage]] = None,
) -> DiscoveryResult:
    """Extract style features for every record, cluster them and pick the max/min pair."""
    if images is None:
        images = [read_png(manifest.image_path(r)) for r in manifest.records]
    features = extract_style_features(classifier, images)
    model = kmeans_cluster(
        features,
        config.k,
        seed,
        max_iter=config.max_iter,
        normalize=config.normalize,
        record_ids=[r.record_id for r in manifest.records],
    )
    pair = select_cluster_pair(model)
    tags = [r.style_tag for r in manifest.records]
    purity = cluster_purity(model.assignments, tags) if all(t is not None for t in tags) else None
    logger.info(f"Hidden styles: sizes {model.sizes.tolist()}, selected pair {pair}, purity {purity}")
    return DiscoveryResult(model=model, pair=pair, purity=purity)
