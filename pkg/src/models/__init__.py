"""Domain models for the SAN-lite pipeline"""

from .annotation import DatasetManifest, FaceRecord, LandmarkAnnotation, ManifestStyle, Split
from .configs import (
    ClassifierConfig,
    CrossStyleConfig,
    CycleTrainConfig,
    DataConfig,
    DetectorConfig,
    EvaluationConfig,
    KMeansConfig,
    NormalizerKind,
    PathsConfig,
    PipelineConfig,
    StreamMode,
    SynthParams,
)
from .reports import CedCurve, ClusterModel, EvalReport, EvalResult, StyleMatrix, SubsetSummary, TrainingLog

__all__ = [
    "DatasetManifest",
    "FaceRecord",
    "LandmarkAnnotation",
    "ManifestStyle",
    "Split",
    "ClassifierConfig",
    "CrossStyleConfig",
    "CycleTrainConfig",
    "DataConfig",
    "DetectorConfig",
    "EvaluationConfig",
    "KMeansConfig",
    "NormalizerKind",
    "PathsConfig",
    "PipelineConfig",
    "StreamMode",
    "SynthParams",
    "CedCurve",
    "ClusterModel",
    "EvalReport",
    "EvalResult",
    "StyleMatrix",
    "SubsetSummary",
    "TrainingLog",
]
