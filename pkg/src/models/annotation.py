import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class ManifestStyle(str, Enum):
    ORIGINAL = "original"  # Unfiltered source images
    LIGHT = "light"
    GRAY = "gray"
    SKETCH = "sketch"
    SYNTHETIC_MIXED = "synthetic-mixed"  # Procedural faces under mixed capture conditions
    AGGREGATED = "aggregated"  # Style-aggregated images from the cycle generators


class LandmarkAnnotation(BaseModel):
    points: List[Tuple[float, float]] = Field(..., description="K (x, y) pairs in original-image pixels")
    visibility: List[bool] = Field(..., description="Per-landmark visibility flags")

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def _check_points(self) -> "LandmarkAnnotation":
        if len(self.points) < 2:
            raise ValueError(f"An annotation needs K >= 2 landmarks, got {len(self.points)}")
        if len(self.visibility) != len(self.points):
            raise ValueError(
                f"visibility has {len(self.visibility)} flags for {len(self.points)} landmarks"
            )
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"Landmark coordinates must be finite, got ({x}, {y})")
        return self

    @property
    def num_landmarks(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    def visible_mask(self) -> np.ndarray:
        return np.asarray(self.visibility, dtype=bool)

    @classmethod
    def from_array(cls, points: np.ndarray, visibility: Optional[List[bool]] = None) -> "LandmarkAnnotation":
        points = np.asarray(points, dtype=np.float64)
        return cls(
            points=[(float(x), float(y)) for x, y in points],
            visibility=list(visibility) if visibility is not None else [True] * len(points),
        )


class FaceRecord(BaseModel):
    record_id: str = Field(..., description="Stable identifier, unique within a manifest")
    image_path: str = Field(..., description="Image path relative to the manifest directory")
    box: Tuple[float, float, float, float] = Field(..., description="Face box (x1, y1, x2, y2)")
    annotation: LandmarkAnnotation
    style_tag: Optional[str] = Field(None, description="Known style or capture condition, if any")
    attributes: Dict[str, float] = Field(default_factory=dict, description="e.g. roll_deg, yaw")

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("box")
    @classmethod
    def _check_box(cls, box):
        x1, y1, x2, y2 = box
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"Face box must satisfy x1 < x2 and y1 < y2, got {box}")
        return box

    @property
    def box_size(self) -> Tuple[float, float]:
        x1, y1, x2, y2 = self.box
        return x2 - x1, y2 - y1


class DatasetManifest(BaseModel):
    name: str
    split: Split
    style: ManifestStyle
    num_landmarks: int = Field(..., ge=2, description="K, shared by every record")
    records: List[FaceRecord] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    # Directory image paths are resolved against; set when read from or written to disk
    _root: Optional[Path] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_records(self) -> "DatasetManifest":
        for record in self.records:
            if record.annotation.num_landmarks != self.num_landmarks:
                raise ValueError(
                    f"Record {record.record_id} has {record.annotation.num_landmarks} landmarks, "
                    f"manifest declares K={self.num_landmarks}"
                )
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Manifest {self.name} has duplicate record ids")
        return self

    @property
    def root(self) -> Path:
        return self._root if self._root is not None else Path.cwd()

    def with_root(self, root: Path) -> "DatasetManifest":
        self._root = Path(root)
        return self

    def image_path(self, record: FaceRecord) -> Path:
        return self.root / record.image_path

    def __len__(self) -> int:
        return len(self.records)
