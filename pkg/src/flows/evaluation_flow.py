"""Cross-style evaluation stage and the final run report."""

import json
import logging
from typing import Any, Dict

import pandas as pd

from src.flows.aggregation_flow import cycle_summary, load_generators
from src.flows.data_flow import read_style_sets
from src.flows.detector_flow import EVAL_REPORT_JSON
from src.flows.discovery_flow import read_discovery_summary
from src.flows.layout import RunLayout
from src.logic.cross_style import DetectorVariant, cross_style_matrix, make_detector_factory
from src.logic.report import emit_report
from src.models.configs import PipelineConfig
from src.models.reports import StyleMatrix
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)


def run_cross_style(config: PipelineConfig, layout: RunLayout, seed: int) -> StyleMatrix:
    """Train every configured variant on each styled training set and test on all four styles."""
    cross = config.cross_style
    train_sets = read_style_sets(layout, "train")
    test_sets = read_style_sets(layout, "test")
    generators = None
    if DetectorVariant.SAN.value in cross.variants:
        g_to_a, g_to_b = load_generators(layout)
        generators = (g_to_a, g_to_b)
    factory = make_detector_factory(
        train_sets,
        config.detector,
        generators=generators,
        fixed_style=cross.fixed_style,
        epochs=cross.detector_epochs,
    )
    matrix = cross_style_matrix(
        factory,
        train_sets,
        test_sets,
        cross.variants,
        seed,
        config.evaluation,
        base_variant=cross.base_variant,
        target_variant=cross.target_variant,
    )
    emit_report(matrix.reports, layout.cross_style_dir, matrix=matrix)
    if matrix.failed_cells:
        logger.warning(f"Cross-style cells that failed: {matrix.failed_cells}")
    return matrix


def _matrix_summary(layout: RunLayout, config: PipelineConfig) -> Dict[str, Any]:
    summary: Dict[str, Any] = {}
    for variant in config.cross_style.variants:
        path = layout.cross_style_dir / f"matrix_{variant}.csv"
        if not path.is_file():
            continue
        grid = pd.read_csv(path, index_col=0)
        matrix = StyleMatrix(styles=list(grid.columns), grids={variant: grid})
        summary[variant] = {
            "grid": json.loads(grid.to_json(orient="index")),
            "diagonal": matrix.diagonal(variant).tolist(),
            "off_diagonal_row_means": matrix.off_diagonal_row_means(variant).tolist(),
            "off_diagonal_mean": matrix.off_diagonal_mean(variant),
        }
    return summary


def build_run_report(config: PipelineConfig, layout: RunLayout) -> Dict[str, Any]:
    """Collect the headline numbers of every finished stage into report.json."""
    report: Dict[str, Any] = {"seed": config.seed}
    if (layout.discovery_dir / "discovery.json").is_file():
        report["discovery"] = read_discovery_summary(layout)
    if layout.gan_dir.is_dir():
        report["cycle"] = cycle_summary(layout)
    eval_path = layout.evaluation_dir / EVAL_REPORT_JSON
    if eval_path.is_file():
        evaluation = json.loads(eval_path.read_text(encoding="utf-8"))
        evaluation.pop("per_image", None)
        report["evaluation"] = evaluation
    if layout.cross_style_dir.is_dir():
        report["cross_style"] = _matrix_summary(layout, config)
    atomic_write_text(layout.report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    logger.info(f"Run report written to {layout.report_path}")
    return report
