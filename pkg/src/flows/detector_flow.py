"""Detector stages: train the configured detector, then evaluate it on the test split."""

import logging
from typing import Optional

import numpy as np

from src.flows.aggregation_flow import read_aggregated
from src.flows.data_flow import read_original
from src.flows.layout import RunLayout
from src.logic.detector import DetectorModel
from src.logic.detector_training import DetectorTrainResult, evaluate_detector, train_detector
from src.logic.metrics import build_eval_report
from src.logic.report import emit_report, write_eval_report_json
from src.models.configs import DetectorConfig, PipelineConfig, StreamMode
from src.models.reports import EvalReport
from src.numerics.checkpoint import load_checkpoint, load_into, save_checkpoint
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)

MODEL_CHECKPOINT = "model.ckpt.json"
TRAIN_LOG_CSV = "train_log.csv"
EVAL_REPORT_JSON = "eval_report.json"

_VARIANT_BY_MODE = {
    StreamMode.TWO_STREAM: "san",
    StreamMode.ORIGINAL_ONLY: "san-no-gan",
    StreamMode.AGGREGATED_ONLY: "aggregated-only",
}


def variant_name(stream_mode) -> str:
    return _VARIANT_BY_MODE[StreamMode(stream_mode)]


def _needs_aggregated(config: DetectorConfig) -> bool:
    return StreamMode(config.stream_mode) is not StreamMode.ORIGINAL_ONLY


def train_main_detector(config: PipelineConfig, layout: RunLayout, seed: int) -> DetectorTrainResult:
    """Train on the original training split; the second stream reads the aggregated copy."""
    train = read_original(layout, "train")
    aggregated = read_aggregated(layout, "original", "train") if _needs_aggregated(config.detector) else None
    result = train_detector(train, aggregated, config.detector, seed)

    out_dir = layout.detector_dir(variant_name(config.detector.stream_mode))
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out_dir / MODEL_CHECKPOINT, metadata={"config": config.detector.model_dump(mode="json")})
    csv = result.log.to_frame().to_csv(index=False, float_format="%.8f", lineterminator="\n")
    atomic_write_text(out_dir / TRAIN_LOG_CSV, csv)
    logger.info(f"Detector checkpoint written to {out_dir}")
    return result


def load_detector(layout: RunLayout, stream_mode) -> DetectorModel:
    path = layout.detector_dir(variant_name(stream_mode)) / MODEL_CHECKPOINT
    if not path.is_file():
        raise FileNotFoundError(f"No detector checkpoint at {path}; run train-detector first")
    config = DetectorConfig.model_validate(load_checkpoint(path).metadata["config"])
    model = DetectorModel(config, np.random.default_rng(0))
    load_into(model, path)
    return model


def evaluate_main_detector(
    config: PipelineConfig, layout: RunLayout, model: Optional[DetectorModel] = None
) -> EvalReport:
    """NME, CED and AUC of the trained detector on the original test split."""
    model = model or load_detector(layout, config.detector.stream_mode)
    test = read_original(layout, "test")
    aggregated = read_aggregated(layout, "original", "test") if _needs_aggregated(model.config) else None
    name = variant_name(model.config.stream_mode)
    result = evaluate_detector(
        model,
        test,
        config.evaluation,
        detector_name=name,
        aggregated_manifest=aggregated,
        train_style="original",
        test_style="original",
    )
    report = build_eval_report(result, config.evaluation, name=f"{name}@{test.name}")
    out_dir = layout.evaluation_dir
    write_eval_report_json(report, out_dir / EVAL_REPORT_JSON)
    emit_report([report], out_dir)
    logger.info(f"Evaluation of {name}: mean NME {report.mean_nme:.4f}, AUC@{report.auc_threshold} {report.auc:.4f}")
    return report
