"""Deterministic k-means with k-means++ seeding over style features."""

import json
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.models.reports import ClusterModel
from src.utils.utils import atomic_write_text

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 100


def l2_normalize(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(features, axis=1, keepdims=True)
    return features / np.maximum(norms, 1e-12)


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of k seed points: first uniform, then proportional to squared distance."""
    n = len(points)
    chosen = [int(rng.integers(n))]
    nearest = squared_distances(points, points[chosen]).min(axis=1)
    while len(chosen) < k:
        total = nearest.sum()
        if total <= 0:
            raise ValueError(f"k-means++ ran out of distinct points after {len(chosen)} seeds (k={k})")
        index = int(rng.choice(n, p=nearest / total))
        chosen.append(index)
        nearest = np.minimum(nearest, squared_distances(points, points[[index]])[:, 0])
    return np.array(chosen)


def reseed_empty_clusters(points: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> list:
    """
    Move every empty cluster's centroid onto the point farthest from its assigned
    centroid, in place. Each point seeds at most one cluster. Returns the chosen
    point indices.
    """
    gaps = squared_distances(points, centroids)[np.arange(len(points)), assignments]
    chosen = []
    for j in range(len(centroids)):
        if (assignments == j).any():
            continue
        available = gaps.copy()
        available[chosen] = -np.inf
        far = int(available.argmax())
        logger.warning(f"k-means cluster {j} became empty; reseeding at point {far}")
        centroids[j] = points[far]
        chosen.append(far)
    return chosen


def kmeans_cluster(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    normalize: bool = False,
    record_ids: Optional[Sequence[str]] = None,
) -> ClusterModel:
    """
    Lloyd iterations from k-means++ seeds until assignments stop changing or max_iter.

    Nearest-centroid ties go to the lowest centroid index. A cluster that loses
    all its points is reseeded at the point farthest from its centroid.

    Raises:
        ValueError: fewer than k (distinct) points
    """
    points = np.asarray(features, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"kmeans_cluster expects an (n, d) feature matrix, got shape {points.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(points) < k or len(np.unique(points, axis=0)) < k:
        raise ValueError(f"kmeans_cluster needs at least k={k} distinct points, got {len(points)} points")
    if normalize:
        points = l2_normalize(points)

    rng = np.random.default_rng(seed)
    centroids = points[kmeans_plus_plus(points, k, rng)].copy()
    rows = np.arange(len(points))
    assignments = None
    history = []
    iterations = 0

    for iterations in range(1, max_iter + 1):
        d2 = squared_distances(points, centroids)
        new_assignments = d2.argmin(axis=1)
        history.append(float(d2[rows, new_assignments].sum()))
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        for j in range(k):
            members = assignments == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)
        reseed_empty_clusters(points, centroids, assignments)

    d2 = squared_distances(points, centroids)
    assignments = d2.argmin(axis=1)
    distances = np.sqrt(d2[rows, assignments])
    inertia = float(d2[rows, assignments].sum())
    logger.info(f"k-means (k={k}) finished after {iterations} iteration(s), inertia {inertia:.6f}")
    return ClusterModel(
        centroids=centroids,
        assignments=assignments,
        distances=distances,
        inertia=inertia,
        inertia_history=history,
        iterations=iterations,
        record_ids=list(record_ids) if record_ids is not None else [],
    )


def select_cluster_pair(model: ClusterModel) -> Tuple[int, int]:
    """
    The largest cluster and the smallest other cluster.

    Size ties go to the lower index for both picks.
    """
    sizes = model.sizes
    if len(sizes) < 2:
        raise ValueError(f"select_cluster_pair needs k >= 2, got k={len(sizes)}")
    largest = int(np.argmax(sizes))
    others = [j for j in range(len(sizes)) if j != largest]
    smallest = min(others, key=lambda j: (sizes[j], j))
    return largest, smallest


def cluster_purity(assignments: Sequence[int], tags: Sequence[str]) -> float:
    """Fraction of points whose tag is the majority tag of their cluster."""
    frame = pd.DataFrame({"cluster": np.asarray(assignments), "tag": list(tags)})
    if frame.empty:
        raise ValueError("cluster_purity needs at least one point")
    majority = frame.groupby("cluster")["tag"].agg(lambda s: s.value_counts().iloc[0])
    return float(majority.sum() / len(frame))


def assignments_frame(model: ClusterModel) -> pd.DataFrame:
    record_ids = model.record_ids or [str(i) for i in range(len(model.assignments))]
    return pd.DataFrame(
        {
            "record_id": record_ids,
            "cluster_index": model.assignments.astype(int),
            "distance": model.distances,
        }
    )


def write_cluster_csv(model: ClusterModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    atomic_write_text(path, assignments_frame(model).to_csv(index=False, float_format="%.8f"))
    return path


def write_cluster_model(model: ClusterModel, path: Union[str, Path], pair: Optional[Tuple[int, int]] = None) -> Path:
    path = Path(path)
    atomic_write_text(path, json.dumps(model.to_dict(pair), indent=2, sort_keys=True) + "\n")
    return path
