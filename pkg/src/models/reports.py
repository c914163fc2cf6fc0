from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd


@dataclass
class EvalResult:
    """Per-image NME of one detector on one test set"""

    record_ids: List[str]
    nme: np.ndarray
    normalizer: str  # "interocular" or "face-size"
    dataset: str
    detector: str
    train_style: Optional[str] = None
    test_style: Optional[str] = None
    attributes: List[Dict[str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.nme = np.asarray(self.nme, dtype=np.float64)
        if len(self.record_ids) != len(self.nme):
            raise ValueError(f"{len(self.record_ids)} record ids for {len(self.nme)} NME values")
        if np.any(self.nme < 0) or not np.all(np.isfinite(self.nme)):
            raise ValueError(f"NME values must be finite and >= 0 for {self.dataset}/{self.detector}")

    @property
    def mean_nme(self) -> float:
        return float(self.nme.mean()) if len(self.nme) else float("nan")

    def subset(self, mask: np.ndarray) -> "EvalResult":
        mask = np.asarray(mask, dtype=bool)
        return EvalResult(
            record_ids=[r for r, keep in zip(self.record_ids, mask) if keep],
            nme=self.nme[mask],
            normalizer=self.normalizer,
            dataset=self.dataset,
            detector=self.detector,
            train_style=self.train_style,
            test_style=self.test_style,
            attributes=[a for a, keep in zip(self.attributes, mask) if keep] if self.attributes else [],
        )


@dataclass
class CedCurve:
    """Fraction of images with NME at or below each grid error"""

    grid: np.ndarray
    fractions: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.fractions = np.asarray(self.fractions, dtype=np.float64)
        if self.grid.shape != self.fractions.shape:
            raise ValueError(f"CED grid {self.grid.shape} and fractions {self.fractions.shape} differ")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("CED grid must be strictly ascending")
        if np.any(np.diff(self.fractions) < 0) or np.any((self.fractions < 0) | (self.fractions > 1)):
            raise ValueError("CED fractions must be nondecreasing within [0, 1]")


@dataclass
class SubsetSummary:
    subset: str  # "full", "common" or "challenging"
    count: int
    mean_nme: float
    auc: float
    failure_rate: float


@dataclass
class EvalReport:
    """NME, CED and AUC for one detector on one test set, with per-subset summaries"""

    name: str
    result: EvalResult
    ced: CedCurve
    auc: float
    auc_threshold: float
    summaries: List[SubsetSummary] = field(default_factory=list)

    @property
    def mean_nme(self) -> float:
        return self.result.mean_nme

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "dataset": self.result.dataset,
            "detector": self.result.detector,
            "normalizer": self.result.normalizer,
            "train_style": self.result.train_style,
            "test_style": self.result.test_style,
            "num_images": len(self.result.nme),
            "mean_nme": self.mean_nme,
            "auc_threshold": self.auc_threshold,
            "auc": self.auc,
            "summaries": [vars(s).copy() for s in self.summaries],
            "per_image": [
                {"record_id": r, "nme": float(v)} for r, v in zip(self.result.record_ids, self.result.nme)
            ],
        }


@dataclass
class StyleMatrix:
    """Train-style x test-style NME grids, one per detector variant"""

    styles: List[str]
    grids: Dict[str, pd.DataFrame]
    base_variant: Optional[str] = None
    target_variant: Optional[str] = None
    improvement: Optional[pd.DataFrame] = None
    failed_cells: List[Tuple[str, str]] = field(default_factory=list)  # (variant, train_style)
    reports: List[EvalReport] = field(default_factory=list)

    def diagonal(self, variant: str) -> np.ndarray:
        return np.diag(self.grids[variant].to_numpy())

    def off_diagonal_row_means(self, variant: str) -> np.ndarray:
        grid = self.grids[variant].to_numpy()
        n = grid.shape[0]
        off = ~np.eye(n, dtype=bool)
        return np.array([grid[i][off[i]].mean() for i in range(n)])

    def off_diagonal_mean(self, variant: str) -> float:
        grid = self.grids[variant].to_numpy()
        return float(grid[~np.eye(grid.shape[0], dtype=bool)].mean())


@dataclass
class ClusterModel:
    """k-means centroids and per-image assignments over style features"""

    centroids: np.ndarray  # (k, D)
    assignments: np.ndarray  # (n,)
    distances: np.ndarray  # (n,) distance to the assigned centroid
    inertia: float
    inertia_history: List[float] = field(default_factory=list)
    iterations: int = 0
    record_ids: List[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def to_dict(self, pair: Optional[Tuple[int, int]] = None) -> Dict[str, Any]:
        payload = {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "sizes": self.sizes.tolist(),
            "inertia": self.inertia,
            "inertia_history": list(self.inertia_history),
            "iterations": self.iterations,
        }
        if pair is not None:
            payload["selected_pair"] = {"a": int(pair[0]), "b": int(pair[1])}
        return payload


@dataclass
class TrainingLog:
    """Loss components recorded during a training loop"""

    entries: List[Dict[str, float]] = field(default_factory=list)

    def record(self, **values: float) -> None:
        self.entries.append({k: float(v) for k, v in values.items()})

    def __len__(self) -> int:
        return len(self.entries)

    def column(self, name: str) -> np.ndarray:
        return np.array([e[name] for e in self.entries], dtype=np.float64)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.entries)
