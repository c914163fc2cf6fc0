"""
Report files: per-image and summary CSVs, style-matrix CSVs, and an SVG plot of
CED curves. Output bytes depend only on the inputs.

CSV schemas (column order is stable):
    per_image.csv    report, detector, train_style, test_style, record_id, nme, nme_x100
    summary.csv      report, subset, count, mean_nme, mean_nme_x100, auc, failure_rate
    matrix_<v>.csv   train_style, original, light, gray, sketch
    improvement.csv  train_style, original, light, gray, sketch
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.logic.metrics import ced_curve, error_grid
from src.models.reports import CedCurve, EvalReport, StyleMatrix
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.8f"
SVG_WIDTH, SVG_HEIGHT = 480, 320
MARGIN = 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def per_image_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        result = report.result
        for record_id, value in zip(result.record_ids, result.nme):
            rows.append(
                {
                    "report": report.name,
                    "detector": result.detector,
                    "train_style": result.train_style or "",
                    "test_style": result.test_style or "",
                    "record_id": record_id,
                    "nme": float(value),
                    "nme_x100": float(value) * 100.0,
                }
            )
    columns = ["report", "detector", "train_style", "test_style", "record_id", "nme", "nme_x100"]
    return pd.DataFrame(rows, columns=columns)


def summary_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        for s in report.summaries:
            rows.append(
                {
                    "report": report.name,
                    "subset": s.subset,
                    "count": s.count,
                    "mean_nme": s.mean_nme,
                    "mean_nme_x100": s.mean_nme * 100.0,
                    "auc": s.auc,
                    "failure_rate": s.failure_rate,
                }
            )
    columns = ["report", "subset", "count", "mean_nme", "mean_nme_x100", "auc", "failure_rate"]
    return pd.DataFrame(rows, columns=columns)


def _write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    atomic_write_text(path, frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n"))
    return path


def _polyline_points(curve: CedCurve, x_max: float) -> str:
    inside = curve.grid <= x_max
    xs = MARGIN + curve.grid[inside] / x_max * (SVG_WIDTH - 2 * MARGIN)
    ys = SVG_HEIGHT - MARGIN - curve.fractions[inside] * (SVG_HEIGHT - 2 * MARGIN)
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def render_ced_svg(curves: Dict[str, CedCurve], x_max: float = 0.2) -> str:
    """Line plot with one polyline per named curve, x = NME in [0, x_max], y = fraction."""
    left, bottom = MARGIN, SVG_HEIGHT - MARGIN
    right, top = SVG_WIDTH - MARGIN, MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
        f'<text x="{(left + right) // 2}" y="{SVG_HEIGHT - 8}" font-size="12" text-anchor="middle">NME</text>',
        f'<text x="12" y="{(top + bottom) // 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 12 {(top + bottom) // 2})">Fraction of images</text>',
        f'<text x="{left}" y="{bottom + 14}" font-size="10" text-anchor="middle">0</text>',
        f'<text x="{right}" y="{bottom + 14}" font-size="10" text-anchor="middle">{x_max:g}</text>',
        f'<text x="{left - 6}" y="{top + 4}" font-size="10" text-anchor="end">1</text>',
    ]
    for i, (label, curve) in enumerate(curves.items()):
        color = COLORS[i % len(COLORS)]
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{_polyline_points(curve, x_max)}">'
            f"<title>{label}</title></polyline>"
        )
        parts.append(f'<text x="{right - 4}" y="{top + 14 * (i + 1)}" font-size="10" fill="{color}" '
                     f'text-anchor="end">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def curves_by_detector(reports: Sequence[EvalReport], grid: Optional[np.ndarray] = None) -> Dict[str, CedCurve]:
    """Pool the per-image errors of every report of the same detector into one CED curve."""
    pooled: Dict[str, List[np.ndarray]] = {}
    for report in reports:
        pooled.setdefault(report.result.detector, []).append(report.result.nme)
    grid = error_grid() if grid is None else grid
    return {name: ced_curve(np.concatenate(values), grid) for name, values in pooled.items()}


def write_eval_report_json(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    atomic_write_text(path, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def emit_report(
    reports: Sequence[EvalReport],
    out_dir: Union[str, Path],
    matrix: Optional[StyleMatrix] = None,
    curves: Optional[Dict[str, CedCurve]] = None,
) -> Dict[str, Path]:
    """
    Write per_image.csv, summary.csv and ced.svg (plus matrix CSVs when given).

    Args:
        curves: CED curves to plot; defaults to one pooled curve per detector
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {
        "per_image": _write_csv(per_image_frame(reports), out_dir / "per_image.csv"),
        "summary": _write_csv(summary_frame(reports), out_dir / "summary.csv"),
    }
    if matrix is not None:
        for variant, grid in matrix.grids.items():
            written[f"matrix_{variant}"] = _write_csv(grid, out_dir / f"matrix_{variant}.csv", index=True)
        if matrix.improvement is not None:
            written["improvement"] = _write_csv(matrix.improvement, out_dir / "improvement.csv", index=True)
    curves = curves if curves is not None else curves_by_detector(reports)
    svg_path = out_dir / "ced.svg"
    atomic_write_text(svg_path, render_ced_svg(curves))
    written["ced"] = svg_path
    logger.info(f"Wrote {len(written)} report file(s) to {out_dir}")
    return written
