"""Style discovery, style aggregation, landmark detection and evaluation"""

from .aggregation import aggregate_style, precompute_aggregated_manifest
from .cross_style import cross_style_matrix, make_detector_factory
from .cycle_gan import train_cycle_generators
from .detector import DetectorModel, decode_landmarks, make_gt_beliefmaps
from .detector_training import evaluate_detector, train_detector
from .kmeans import kmeans_cluster, select_cluster_pair
from .metrics import auc_at, ced_curve, nme
from .report import emit_report
from .style_classifier import train_style_classifier
from .style_discovery import discover_hidden_styles

__all__ = [
    "aggregate_style",
    "precompute_aggregated_manifest",
    "cross_style_matrix",
    "make_detector_factory",
    "train_cycle_generators",
    "DetectorModel",
    "decode_landmarks",
    "make_gt_beliefmaps",
    "evaluate_detector",
    "train_detector",
    "kmeans_cluster",
    "select_cluster_pair",
    "auc_at",
    "ced_curve",
    "nme",
    "emit_report",
    "train_style_classifier",
    "discover_hidden_styles",
]
