from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Strict(BaseModel):
    # Unknown keys are rejected everywhere so typos in config files fail loudly
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class StreamMode(str, Enum):
    TWO_STREAM = "two-stream"
    ORIGINAL_ONLY = "original-only"
    AGGREGATED_ONLY = "aggregated-only"


class NormalizerKind(str, Enum):
    INTEROCULAR = "interocular"  # 300-W protocol
    FACE_SIZE = "face-size"  # AFLW protocol


class SynthParams(_Strict):
    image_size: int = Field(96, ge=32, description="Rendered image side in pixels")
    scale_range: Tuple[float, float] = Field((0.24, 0.31), description="Head half-width / image size")
    aspect_range: Tuple[float, float] = Field((1.15, 1.35), description="Head half-height / half-width")
    roll_range_deg: float = Field(20.0, ge=0, description="Max in-plane rotation either way")
    yaw_range: float = Field(0.25, ge=0, le=0.5, description="Max horizontal feature shift either way")
    translate_range: float = Field(0.06, ge=0, description="Max head-center offset / image size")
    supersample: int = Field(3, ge=1, description="Anti-aliasing samples per pixel axis")
    capture_styles: List[str] = Field(default_factory=lambda: ["plain"])

    @field_validator("capture_styles")
    @classmethod
    def _known_capture_styles(cls, value):
        known = {"plain", "dim", "faded"}
        unknown = sorted(set(value) - known)
        if not value or unknown:
            raise ValueError(f"capture_styles must be a non-empty subset of {sorted(known)}, got {value}")
        return value


class DataConfig(_Strict):
    train_count: int = Field(500, ge=1)
    test_count: int = Field(100, ge=1)
    synth: SynthParams = Field(default_factory=lambda: SynthParams(capture_styles=["plain", "dim", "faded"]))


class ClassifierConfig(_Strict):
    image_size: int = Field(32, description="Classifier input side; must be divisible by 16")
    channels: List[int] = Field(default_factory=lambda: [8, 16, 32, 64])
    epochs: int = Field(2, ge=1)
    lr: float = Field(0.01, gt=0)
    optimizer: Literal["sgd", "adam"] = "sgd"
    momentum: float = 0.9
    batch_size: int = Field(16, ge=1)
    weight_decay: float = Field(0.0, ge=0)

    @property
    def feature_dim(self) -> int:
        return self.channels[-1]

    @model_validator(mode="after")
    def _check(self) -> "ClassifierConfig":
        if len(self.channels) != 4:
            raise ValueError(f"Classifier needs 4 conv blocks, got channels={self.channels}")
        if self.image_size % 16:
            raise ValueError(f"Classifier image_size must be divisible by 16, got {self.image_size}")
        return self


class KMeansConfig(_Strict):
    k: int = Field(3, ge=1)
    max_iter: int = Field(100, ge=1)
    normalize: bool = Field(True, description="L2-normalize features before clustering")


class CycleTrainConfig(_Strict):
    lambda_cycle: float = Field(10.0, ge=0)
    lambda_identity_rel: float = Field(0.1, ge=0, description="Identity weight relative to lambda_cycle")
    batch_size: int = Field(4, ge=1)
    lr: float = Field(1e-3, gt=0, description="Desk-scale rate; the \"paper\" preset uses 2e-4")
    betas: Tuple[float, float] = (0.5, 0.999)
    iterations: int = Field(300, ge=1)
    image_size: int = Field(32, description="Training resolution; must be divisible by 4")
    base_channels: int = Field(16, ge=1)
    residual_blocks: int = Field(2, ge=0)
    log_interval: int = Field(25, ge=1)
    seed: int = 0

    @field_validator("image_size")
    @classmethod
    def _divisible_by_four(cls, value):
        if value % 4:
            raise ValueError(f"Cycle image_size must be divisible by 4, got {value}")
        return value


class DetectorConfig(_Strict):
    input_size: int = Field(64, description="Crop side; must be divisible by 8")
    num_landmarks: int = Field(5, ge=2, description="K")
    extractor_channels: List[int] = Field(default_factory=lambda: [16, 32, 32, 64])
    head_channels: int = Field(32, ge=1)
    sigma_gt: float = Field(1.5, gt=0, description="GT Gaussian std in heatmap cells")
    stages: Literal[3] = 3
    stream_mode: StreamMode = StreamMode.TWO_STREAM
    optimizer: Literal["sgd", "adam"] = "adam"
    lr: float = Field(1e-3, gt=0)
    momentum: float = 0.9
    lr_milestones: List[int] = Field(default_factory=list)
    lr_gamma: float = Field(0.5, gt=0)
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(8, ge=1)
    weight_decay: float = Field(0.0005, ge=0)
    expand_ratio: float = Field(0.2, ge=0)
    augment_margin: int = Field(3, ge=0, description="Max random crop shift in crop pixels")
    head_init_std: float = Field(0.1, gt=0, description="Gaussian std for stage heads (variance 0.01)")

    @property
    def feature_channels(self) -> int:
        return self.extractor_channels[-1]

    @property
    def heatmap_size(self) -> int:
        return self.input_size // 8

    @model_validator(mode="after")
    def _check(self) -> "DetectorConfig":
        if self.input_size % 8:
            raise ValueError(f"input_size must be divisible by 8, got {self.input_size}")
        if len(self.extractor_channels) != 4:
            raise ValueError(f"Extractor needs 4 blocks, got channels={self.extractor_channels}")
        return self


class EvaluationConfig(_Strict):
    normalizer: NormalizerKind = NormalizerKind.INTEROCULAR
    eye_indices: Tuple[int, int] = Field((0, 1), description="Outer eye-corner landmark indices")
    auc_threshold: float = Field(0.08, gt=0)
    ced_max: float = Field(0.2, gt=0)
    ced_steps: int = Field(2001, ge=2)
    challenging_roll_deg: float = Field(12.0, ge=0)
    challenging_yaw: float = Field(0.15, ge=0)

    @model_validator(mode="after")
    def _grid_covers_threshold(self) -> "EvaluationConfig":
        if self.ced_max < self.auc_threshold:
            raise ValueError(f"ced_max={self.ced_max} must cover auc_threshold={self.auc_threshold}")
        return self


class CrossStyleConfig(_Strict):
    enabled: bool = True
    variants: List[str] = Field(default_factory=lambda: ["san-no-gan", "san"])
    base_variant: str = "san-no-gan"
    target_variant: str = "san"
    fixed_style: Literal["light", "gray", "sketch"] = "light"
    detector_epochs: Optional[int] = Field(None, ge=1, description="Override detector epochs per cell")


class PathsConfig(_Strict):
    output_dir: Path = Path("runs/default")


class PipelineConfig(_Strict):
    seed: int = 0
    paths: PathsConfig = Field(default_factory=PathsConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    kmeans: KMeansConfig = Field(default_factory=KMeansConfig)
    cycle: CycleTrainConfig = Field(default_factory=CycleTrainConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    cross_style: CrossStyleConfig = Field(default_factory=CrossStyleConfig)
