"""Landmark error metrics: NME under both normalizers, CED curves and AUC."""

import math
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from src.models.annotation import FaceRecord, LandmarkAnnotation
from src.models.configs import EvaluationConfig, NormalizerKind
from src.models.reports import CedCurve, EvalReport, EvalResult, SubsetSummary

Points = Union[np.ndarray, Sequence[Tuple[float, float]]]


def interocular_distance(points: Points, eye_indices: Tuple[int, int] = (0, 1)) -> float:
    points = np.asarray(points, dtype=np.float64)
    left, right = eye_indices
    return float(np.linalg.norm(points[left] - points[right]))


def face_size(box: Tuple[float, float, float, float]) -> float:
    """sqrt(width * height) of the unexpanded face box."""
    x1, y1, x2, y2 = box
    return math.sqrt(max(0.0, x2 - x1) * max(0.0, y2 - y1))


def normalizer_for(record: FaceRecord, kind: Union[str, NormalizerKind], eye_indices=(0, 1)) -> float:
    kind = NormalizerKind(kind)
    if kind is NormalizerKind.INTEROCULAR:
        return interocular_distance(record.annotation.as_array(), eye_indices)
    return face_size(record.box)


def nme(pred: Points, gt: LandmarkAnnotation, normalizer: float) -> float:
    """
    Mean Euclidean error over visible landmarks divided by the normalizer.

    Raises:
        ValueError: non-positive normalizer, no visible landmarks, or a K mismatch
    """
    if not normalizer > 0:
        raise ValueError(f"NME normalizer must be > 0, got {normalizer}")
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 2)
    truth = gt.as_array()
    if pred.shape != truth.shape:
        raise ValueError(f"Predicted {pred.shape[0]} landmarks for {truth.shape[0]} ground-truth landmarks")
    visible = gt.visible_mask()
    if not visible.any():
        raise ValueError("NME needs at least one visible landmark")
    errors = np.linalg.norm(pred[visible] - truth[visible], axis=1)
    return float(errors.mean() / normalizer)


def error_grid(max_error: float = 0.2, steps: int = 2001) -> np.ndarray:
    return np.linspace(0.0, max_error, steps)


def ced_curve(nme_list: Sequence[float], grid: Optional[np.ndarray] = None) -> CedCurve:
    """Fraction of errors at or below each grid value."""
    errors = np.sort(np.asarray(nme_list, dtype=np.float64))
    if errors.size == 0:
        raise ValueError("ced_curve needs at least one error value")
    grid = error_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    fractions = np.searchsorted(errors, grid, side="right") / errors.size
    return CedCurve(grid=grid, fractions=fractions)


def auc_at(ced: CedCurve, threshold: float = 0.08) -> float:
    """Trapezoidal area under the CED curve over [0, threshold], divided by threshold."""
    if threshold <= 0:
        raise ValueError(f"AUC threshold must be > 0, got {threshold}")
    grid, fractions = ced.grid, ced.fractions
    if grid[0] > 0 or grid[-1] < threshold:
        raise ValueError(f"CED grid [{grid[0]}, {grid[-1]}] does not cover [0, {threshold}]")
    inside = grid <= threshold
    xs, ys = grid[inside], fractions[inside]
    if xs[-1] < threshold:
        xs = np.append(xs, threshold)
        ys = np.append(ys, np.interp(threshold, grid, fractions))
    return float(np.clip(trapezoid(ys, xs) / threshold, 0.0, 1.0))


def failure_rate(nme_list: Sequence[float], threshold: float = 0.08) -> float:
    errors = np.asarray(nme_list, dtype=np.float64)
    return float((errors > threshold).mean()) if errors.size else float("nan")


def evaluation_subsets(
    result: EvalResult, roll_threshold_deg: float = 12.0, yaw_threshold: float = 0.15
) -> Dict[str, EvalResult]:
    """
    Split a result into full, common (small roll and yaw) and challenging subsets.

    Records without pose attributes only contribute to the full subset.
    """
    subsets = {"full": result}
    if not result.attributes or any("roll_deg" not in a or "yaw" not in a for a in result.attributes):
        return subsets
    roll = np.abs([a["roll_deg"] for a in result.attributes])
    yaw = np.abs([a["yaw"] for a in result.attributes])
    common = (roll <= roll_threshold_deg) & (yaw <= yaw_threshold)
    subsets["common"] = result.subset(common)
    subsets["challenging"] = result.subset(~common)
    return subsets


def build_eval_report(result: EvalResult, config: EvaluationConfig, name: Optional[str] = None) -> EvalReport:
    grid = error_grid(config.ced_max, config.ced_steps)
    ced = ced_curve(result.nme, grid)
    summaries = []
    for subset_name, subset in evaluation_subsets(
        result, config.challenging_roll_deg, config.challenging_yaw
    ).items():
        if len(subset.nme) == 0:
            continue
        summaries.append(
            SubsetSummary(
                subset=subset_name,
                count=len(subset.nme),
                mean_nme=subset.mean_nme,
                auc=auc_at(ced_curve(subset.nme, grid), config.auc_threshold),
                failure_rate=failure_rate(subset.nme, config.auc_threshold),
            )
        )
    return EvalReport(
        name=name or f"{result.detector}@{result.dataset}",
        result=result,
        ced=ced,
        auc=auc_at(ced, config.auc_threshold),
        auc_threshold=config.auc_threshold,
        summaries=summaries,
    )
