"""
Train-style x test-style evaluation grids for detector variants.

Variants:
    san                 two-stream; second stream is the style-aggregated face
    san-no-gan          original-only stream mode (the base detector)
    style-augmented     original-only, trained on the union of all styled training sets
    fixed-style-stream  two-stream; second stream is a fixed photo-style filter of the input
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.imaging.filters import apply_style
from src.logic.aggregation import aggregate_style
from src.logic.detector import DetectorModel
from src.logic.detector_training import StreamTransform, crop_samples, evaluate_detector, train_detector
from src.logic.metrics import build_eval_report
from src.models.annotation import DatasetManifest
from src.models.configs import DetectorConfig, EvaluationConfig, StreamMode
from src.models.reports import EvalReport, StyleMatrix
from src.utils.utils import derive_seed

logger = logging.getLogger(__name__)

STYLES = ("original", "light", "gray", "sketch")


class DetectorVariant(str, Enum):
    SAN = "san"
    SAN_NO_GAN = "san-no-gan"
    STYLE_AUGMENTED = "style-augmented"
    FIXED_STYLE_STREAM = "fixed-style-stream"


@dataclass
class TrainedDetector:
    model: DetectorModel
    stream_transform: Optional[StreamTransform] = None


DetectorFactory = Callable[[str, str, int], TrainedDetector]


def variant_config(variant: DetectorVariant, config: DetectorConfig, epochs: Optional[int] = None) -> DetectorConfig:
    two_stream = variant in (DetectorVariant.SAN, DetectorVariant.FIXED_STYLE_STREAM)
    update = {"stream_mode": StreamMode.TWO_STREAM if two_stream else StreamMode.ORIGINAL_ONLY}
    if epochs is not None:
        update["epochs"] = epochs
    return config.model_copy(update=update)


def variant_stream_transform(
    variant: DetectorVariant,
    generators: Optional[Tuple[Callable, Callable]] = None,
    fixed_style: str = "light",
) -> Optional[StreamTransform]:
    if variant is DetectorVariant.SAN:
        if generators is None:
            raise ValueError("The san variant needs trained style generators")
        g_to_a, g_to_b = generators
        return lambda image: aggregate_style(image, g_to_a, g_to_b)
    if variant is DetectorVariant.FIXED_STYLE_STREAM:
        return lambda image: apply_style(image, fixed_style)
    return None


def make_detector_factory(
    train_sets: Dict[str, DatasetManifest],
    config: DetectorConfig,
    generators: Optional[Tuple[Callable, Callable]] = None,
    fixed_style: str = "light",
    epochs: Optional[int] = None,
) -> DetectorFactory:
    """Factory training one detector of a given variant on one styled training set."""

    def factory(variant: str, train_style: str, seed: int) -> TrainedDetector:
        variant = DetectorVariant(variant)
        cfg = variant_config(variant, config, epochs)
        transform = variant_stream_transform(variant, generators, fixed_style)
        manifest = train_sets[train_style]
        samples = None
        if variant is DetectorVariant.STYLE_AUGMENTED:
            samples = [s for style in STYLES if style in train_sets for s in crop_samples(train_sets[style], cfg)]
        result = train_detector(manifest, None, cfg, seed, stream_transform=transform, samples=samples)
        return TrainedDetector(model=result.model, stream_transform=transform)

    return factory


def relative_improvement(base: pd.DataFrame, target: pd.DataFrame) -> pd.DataFrame:
    """(nme_base - nme_target) / nme_base per cell."""
    return (base - target) / base


def cross_style_matrix(
    detector_factory: DetectorFactory,
    train_sets: Dict[str, DatasetManifest],
    test_sets: Dict[str, DatasetManifest],
    variants: Sequence[str],
    seed: int,
    evaluation: EvaluationConfig,
    base_variant: str = DetectorVariant.SAN_NO_GAN.value,
    target_variant: str = DetectorVariant.SAN.value,
) -> StyleMatrix:
    """
    Train one detector per (variant, train style) and evaluate it on every test style.

    Each train style gets one seed, shared by all variants. A cell whose training
    or evaluation fails is logged, left as NaN and the run continues.
    """
    styles = [s for s in STYLES if s in train_sets]
    missing = [s for s in styles if s not in test_sets]
    if missing or len(styles) != len(STYLES):
        raise ValueError(
            f"cross_style_matrix needs train and test sets for {list(STYLES)}; "
            f"got train={sorted(train_sets)} test={sorted(test_sets)}"
        )

    grids: Dict[str, pd.DataFrame] = {}
    reports: List[EvalReport] = []
    failed: List[Tuple[str, str]] = []
    for variant in variants:
        grid = pd.DataFrame(np.nan, index=pd.Index(styles, name="train_style"), columns=styles)
        for index, train_style in enumerate(styles):
            cell_seed = derive_seed(seed, f"cross-style-train-{index}")
            try:
                detector = detector_factory(variant, train_style, cell_seed)
                for test_style in styles:
                    result = evaluate_detector(
                        detector.model,
                        test_sets[test_style],
                        evaluation,
                        detector_name=variant,
                        stream_transform=detector.stream_transform,
                        train_style=train_style,
                        test_style=test_style,
                    )
                    grid.loc[train_style, test_style] = result.mean_nme
                    reports.append(build_eval_report(result, evaluation, f"{variant}:{train_style}->{test_style}"))
            except Exception:
                logger.exception(f"Cross-style cell {variant}/{train_style} failed; marking it NaN")
                grid.loc[train_style, :] = np.nan
                failed.append((variant, train_style))
                reports = [r for r in reports if not (r.result.detector == variant and r.result.train_style == train_style)]
        logger.info(f"Cross-style grid for {variant}:\n{grid.to_string(float_format=lambda v: f'{v:.4f}')}")
        grids[variant] = grid

    improvement = None
    if base_variant in grids and target_variant in grids:
        improvement = relative_improvement(grids[base_variant], grids[target_variant])
    return StyleMatrix(
        styles=styles,
        grids=grids,
        base_variant=base_variant,
        target_variant=target_variant,
        improvement=improvement,
        failed_cells=failed,
        reports=reports,
    )
