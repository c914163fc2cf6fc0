"""
Machine-supervised style classifier: learns to tell the original images from
their Light, Gray and Sketch copies, so its pooled penultimate activations
describe style rather than content.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from tqdm import tqdm

from src.imaging.image import RgbImage, read_png
from src.models.annotation import DatasetManifest
from src.models.configs import ClassifierConfig
from src.numerics import functional as F
from src.numerics.layers import Conv2d, Linear, Module
from src.numerics.optim import Optimizer
from src.numerics.resize import resize_array
from src.numerics.tensor import Tensor, backward, no_grad
from src.utils.utils import get_worker_count

logger = logging.getLogger(__name__)

STYLE_CLASSES = ("original", "light", "gray", "sketch")
INPUT_OFFSET = 0.5


class StyleClassifier(Module):
    """Four conv blocks, global average pool, linear head over the style classes."""

    def __init__(self, config: ClassifierConfig, rng: np.random.Generator, num_classes: int = len(STYLE_CLASSES)):
        self.image_size = config.image_size
        self.num_classes = num_classes
        widths = [3] + list(config.channels)
        self.blocks = [Conv2d(widths[i], widths[i + 1], rng) for i in range(len(config.channels))]
        self.head = Linear(config.feature_dim, num_classes, rng)

    @property
    def feature_dim(self) -> int:
        return self.head.weight.shape[1]

    def features(self, x: Tensor) -> Tensor:
        for i, block in enumerate(self.blocks):
            x = F.relu(block(x))
            if i < len(self.blocks) - 1:
                x = F.max_pool2(x)
        return F.global_avg_pool(x)

    def forward(self, x: Tensor) -> Tensor:
        return self.head(self.features(x))


def prepare_images(images: Sequence[RgbImage], size: int) -> np.ndarray:
    """Resize to size x size, stack as NCHW and center values around zero."""
    batch = np.stack([resize_array(img.to_chw(), size, size) for img in images])
    return (batch - INPUT_OFFSET).astype(np.float32)


def _load(manifest: DatasetManifest, size: int) -> np.ndarray:
    images = [read_png(manifest.image_path(r)) for r in manifest.records]
    return prepare_images(images, size)


@dataclass
class ClassifierTrainResult:
    model: StyleClassifier
    accuracy: float
    initial_loss: float
    final_loss: float
    epoch_losses: List[float] = field(default_factory=list)


def _evaluate(model: StyleClassifier, x: np.ndarray, labels: np.ndarray, batch_size: int):
    losses, correct = [], 0
    with no_grad():
        for start in range(0, len(x), batch_size):
            logits = model(Tensor(x[start : start + batch_size]))
            batch_labels = labels[start : start + batch_size]
            losses.append(F.cross_entropy(logits, batch_labels).item() * len(batch_labels))
            correct += int((logits.data.argmax(axis=1) == batch_labels).sum())
    return float(sum(losses) / len(x)), correct / len(x)


def train_style_classifier(
    original: DatasetManifest,
    styled: Sequence[DatasetManifest],
    config: ClassifierConfig,
    seed: int,
) -> ClassifierTrainResult:
    """
    Cross-entropy training over the original set and its styled copies, one class each.

    Raises:
        ValueError: the manifests do not list the same records in the same order
    """
    manifests = [original] + list(styled)
    reference = [r.record_id for r in original.records]
    for manifest in manifests[1:]:
        if [r.record_id for r in manifest.records] != reference:
            raise ValueError(
                f"Manifest {manifest.name} does not list the same records in the same order as {original.name}"
            )
    if not reference:
        raise ValueError("Cannot train the style classifier on empty manifests")

    x = np.concatenate([_load(m, config.image_size) for m in manifests])
    labels = np.repeat(np.arange(len(manifests)), len(reference))
    rng = np.random.default_rng(seed)
    model = StyleClassifier(config, rng, num_classes=len(manifests))
    optimizer = Optimizer.create(
        model.parameters(),
        config.optimizer,
        config.lr,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
    )

    initial_loss, _ = _evaluate(model, x, labels, config.batch_size)
    logger.info(f"Style classifier: {len(x)} images, {len(manifests)} classes, initial loss {initial_loss:.4f}")
    epoch_losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        running = []
        for start in tqdm(range(0, len(x), config.batch_size), desc=f"classifier epoch {epoch}", disable=None):
            idx = order[start : start + config.batch_size]
            loss = F.cross_entropy(model(Tensor(x[idx])), labels[idx])
            backward(loss)
            optimizer.step()
            optimizer.zero_grad()
            running.append(loss.item())
        epoch_losses.append(float(np.mean(running)))
        logger.info(f"Style classifier epoch {epoch}: mean loss {epoch_losses[-1]:.4f}")

    final_loss, accuracy = _evaluate(model, x, labels, config.batch_size)
    logger.info(f"Style classifier trained: loss {final_loss:.4f}, accuracy {accuracy:.3f}")
    return ClassifierTrainResult(
        model=model, accuracy=accuracy, initial_loss=initial_loss, final_loss=final_loss, epoch_losses=epoch_losses
    )


def extract_style_feature(classifier: StyleClassifier, image: RgbImage) -> np.ndarray:
    """Pooled penultimate activations of one image."""
    with no_grad():
        feats = classifier.features(Tensor(prepare_images([image], classifier.image_size)))
    return feats.data[0].astype(np.float64)


def extract_style_features(
    classifier: StyleClassifier, images: Sequence[RgbImage], batch_size: int = 32
) -> np.ndarray:
    """Features for many images, batches computed in parallel; row order follows images."""

    def _batch(start: int) -> np.ndarray:
        with no_grad():
            x = Tensor(prepare_images(images[start : start + batch_size], classifier.image_size))
            return classifier.features(x).data.astype(np.float64)

    if not images:
        return np.zeros((0, classifier.feature_dim))
    with ThreadPoolExecutor(max_workers=get_worker_count()) as pool:
        return np.concatenate(list(pool.map(_batch, range(0, len(images), batch_size))))
