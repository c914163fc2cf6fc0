"""Detector training loop, inference on manifests and NME evaluation."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.imaging.geometry import CropTransform, crop_face, sample_crop_offset, translate_image
from src.imaging.image import RgbImage, images_to_tensor, read_png
from src.logic.detector import DetectorModel, decode_landmarks, detector_loss, forward, make_gt_beliefmaps
from src.logic.metrics import nme, normalizer_for
from src.models.annotation import DatasetManifest
from src.models.configs import DetectorConfig, EvaluationConfig, StreamMode
from src.models.reports import EvalResult, TrainingLog
from src.numerics.optim import Optimizer, multistep_lr
from src.numerics.tensor import Tensor, backward, no_grad
from src.utils.utils import derive_seed, get_worker_count

logger = logging.getLogger(__name__)

StreamTransform = Callable[[RgbImage], RgbImage]


@dataclass
class CroppedSample:
    record_id: str
    crop_o: RgbImage
    crop_s: RgbImage
    landmarks: np.ndarray  # crop coordinates
    visibility: np.ndarray
    transform: CropTransform


def _check_aligned(manifest: DatasetManifest, aggregated: Optional[DatasetManifest]) -> None:
    if aggregated is None:
        return
    ids = [r.record_id for r in manifest.records]
    if [r.record_id for r in aggregated.records] != ids:
        raise ValueError(f"Manifests {manifest.name} and {aggregated.name} are not aligned record-for-record")


def _second_stream(
    image: RgbImage,
    aggregated: Optional[DatasetManifest],
    index: int,
    stream_transform: Optional[StreamTransform],
) -> RgbImage:
    if aggregated is not None:
        return read_png(aggregated.image_path(aggregated.records[index]))
    if stream_transform is not None:
        return stream_transform(image)
    return image


def crop_samples(
    manifest: DatasetManifest,
    config: DetectorConfig,
    aggregated: Optional[DatasetManifest] = None,
    stream_transform: Optional[StreamTransform] = None,
) -> List[CroppedSample]:
    """
    Crop every record once for both streams with the same transform.

    The second stream comes from the aligned aggregated manifest, else from
    stream_transform applied to the original image, else the original itself.
    """
    _check_aligned(manifest, aggregated)

    def _one(index: int) -> CroppedSample:
        record = manifest.records[index]
        image = read_png(manifest.image_path(record))
        second = _second_stream(image, aggregated, index, stream_transform)
        crop_o, transform = crop_face(image, record.box, config.expand_ratio, config.input_size)
        crop_s, _ = crop_face(second, record.box, config.expand_ratio, config.input_size)
        return CroppedSample(
            record_id=record.record_id,
            crop_o=crop_o,
            crop_s=crop_s,
            landmarks=transform.apply(record.annotation.as_array()),
            visibility=record.annotation.visible_mask(),
            transform=transform,
        )

    with ThreadPoolExecutor(max_workers=get_worker_count()) as pool:
        return list(pool.map(_one, range(len(manifest.records))))


def build_batch(
    samples: List[CroppedSample], config: DetectorConfig, rng: Optional[np.random.Generator] = None
) -> Tuple[Tensor, Tensor, np.ndarray]:
    """Stack crops and H*; with an rng, shift each crop window randomly (both streams alike)."""
    crops_o, crops_s, targets = [], [], []
    size = config.input_size
    for sample in samples:
        crop_o, crop_s, landmarks = sample.crop_o, sample.crop_s, sample.landmarks
        if rng is not None and config.augment_margin > 0:
            dx, dy = sample_crop_offset(landmarks[sample.visibility], (size, size), config.augment_margin, rng)
            crop_o, crop_s = translate_image(crop_o, dx, dy), translate_image(crop_s, dx, dy)
            landmarks = landmarks - np.array([dx, dy], dtype=np.float64)
        crops_o.append(crop_o)
        crops_s.append(crop_s)
        targets.append(make_gt_beliefmaps(landmarks, size, config.sigma_gt, sample.visibility))
    return images_to_tensor(crops_o), images_to_tensor(crops_s), np.stack(targets).astype(np.float32)


@dataclass
class DetectorTrainResult:
    model: DetectorModel
    log: TrainingLog


def train_detector(
    train_manifest: DatasetManifest,
    aggregated_manifest: Optional[DatasetManifest],
    config: DetectorConfig,
    seed: int,
    stream_transform: Optional[StreamTransform] = None,
    samples: Optional[List[CroppedSample]] = None,
) -> DetectorTrainResult:
    """
    Crop (expand 0.2), randomly shift, build H*, run the cascade and minimise the
    four-stage loss; the LR follows the multistep schedule at epoch boundaries.

    Raises:
        ValueError: the aggregated manifest is not aligned with the training manifest
    """
    _check_aligned(train_manifest, aggregated_manifest)
    if samples is None:
        samples = crop_samples(train_manifest, config, aggregated_manifest, stream_transform)
    if not samples:
        raise ValueError(f"Cannot train a detector on the empty manifest {train_manifest.name}")

    model = DetectorModel(config, np.random.default_rng(seed))
    data_rng = np.random.default_rng(derive_seed(seed, "detector-data"))
    optimizer = Optimizer.create(
        model.parameters(),
        config.optimizer,
        config.lr,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
    )
    logger.info(
        f"Training detector ({StreamMode(config.stream_mode).value}) on {len(samples)} samples "
        f"for {config.epochs} epochs, {model.num_parameters()} parameters"
    )

    log = TrainingLog()
    for epoch in range(config.epochs):
        optimizer.set_lr(multistep_lr(config.lr, epoch, config.lr_milestones, config.lr_gamma))
        order = data_rng.permutation(len(samples))
        losses = []
        for start in tqdm(range(0, len(order), config.batch_size), desc=f"detector epoch {epoch}", disable=None):
            batch = [samples[i] for i in order[start : start + config.batch_size]]
            image_o, image_s, target = build_batch(batch, config, data_rng)
            loss = detector_loss(*forward(model, image_o, image_s), target)
            backward(loss)
            optimizer.step()
            optimizer.zero_grad()
            losses.append(loss.item())
        log.record(epoch=epoch, lr=optimizer.lr, loss=float(np.mean(losses)))
        logger.info(f"detector epoch {epoch}: lr {optimizer.lr:g} mean loss {np.mean(losses):.5f}")
    return DetectorTrainResult(model=model, log=log)


def fit_fixed_batch(
    model: DetectorModel,
    image_o: Tensor,
    image_s: Tensor,
    target: np.ndarray,
    optimizer: Optimizer,
    steps: int,
) -> List[float]:
    """Repeated updates on one batch; returns the loss before each step plus the final loss."""
    losses = []
    for _ in range(steps):
        loss = detector_loss(*forward(model, image_o, image_s), target)
        losses.append(loss.item())
        backward(loss)
        optimizer.step()
        optimizer.zero_grad()
    with no_grad():
        losses.append(detector_loss(*forward(model, image_o, image_s), target).item())
    return losses


def predict_samples(model: DetectorModel, samples: List[CroppedSample], batch_size: int = 16) -> List[np.ndarray]:
    """Landmarks in original-image coordinates, decoded from the stage-3 maps."""
    size = model.config.input_size

    def _batch(start: int) -> List[np.ndarray]:
        chunk = samples[start : start + batch_size]
        with no_grad():
            maps = forward(
                model, images_to_tensor([s.crop_o for s in chunk]), images_to_tensor([s.crop_s for s in chunk])
            )
        return [s.transform.invert(decode_landmarks(h, size)) for s, h in zip(chunk, maps.h_3.data)]

    with ThreadPoolExecutor(max_workers=get_worker_count()) as pool:
        batches = list(pool.map(_batch, range(0, len(samples), batch_size)))
    return [points for batch in batches for points in batch]


def evaluate_detector(
    model: DetectorModel,
    manifest: DatasetManifest,
    evaluation: EvaluationConfig,
    detector_name: str,
    aggregated_manifest: Optional[DatasetManifest] = None,
    stream_transform: Optional[StreamTransform] = None,
    train_style: Optional[str] = None,
    test_style: Optional[str] = None,
) -> EvalResult:
    samples = crop_samples(manifest, model.config, aggregated_manifest, stream_transform)
    predictions = predict_samples(model, samples)
    errors = [
        nme(pred, record.annotation, normalizer_for(record, evaluation.normalizer, evaluation.eye_indices))
        for pred, record in zip(predictions, manifest.records)
    ]
    return EvalResult(
        record_ids=[r.record_id for r in manifest.records],
        nme=np.array(errors),
        normalizer=evaluation.normalizer.value,
        dataset=manifest.name,
        detector=detector_name,
        train_style=train_style,
        test_style=test_style,
        attributes=[dict(r.attributes) for r in manifest.records],
    )
