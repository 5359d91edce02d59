"""
MMC - Clustering
Final cluster assignment from consensus factors via restarted k-means
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.preprocessing import normalize

from .errors import DimensionError, NumericError
from .numeric import OrthonormalFactor

logger = logging.getLogger(__name__)

INERTIA_TOL = 1e-10


@dataclass
class KMeansResult:
    """Labels with their inertia (sum of squared distances to centroids)"""
    labels: np.ndarray
    inertia: float
    centroids: np.ndarray
    n_iter: int = 0
    inertia_trace: List[float] = field(default_factory=list)


def as_label_vector(labels, n_clusters: Optional[int] = None) -> np.ndarray:
    """Validate a label vector: integers in [0, n_clusters)"""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionError(f"Labels must be one-dimensional, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise NumericError("Labels must be integers")
    labels = labels.astype(np.int64)
    if labels.size and labels.min() < 0:
        raise NumericError("Labels must be non-negative")
    if n_clusters is not None and labels.size and labels.max() >= n_clusters:
        raise NumericError(f"Label {labels.max()} out of range for {n_clusters} clusters")
    return labels


def row_normalize(U) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows are left unchanged"""
    values = U.values if isinstance(U, OrthonormalFactor) else np.asarray(U, dtype=np.float64)
    zero_rows = int(np.count_nonzero(np.linalg.norm(values, axis=1) == 0.0))
    if zero_rows:
        logger.warning(f"{zero_rows} all-zero rows left unnormalized")
    return normalize(values, norm='l2', axis=1)


def _inertia(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    return float(np.sum((points - centroids[labels]) ** 2))


def _repair_empty(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray, k: int) -> None:
    """Give each empty cluster the point farthest from its own centroid"""
    for j in range(k):
        if np.any(labels == j):
            continue
        counts = np.bincount(labels, minlength=k)
        residual = np.sum((points - centroids[labels]) ** 2, axis=1)
        # only take points from clusters that keep at least one member
        residual[counts[labels] <= 1] = -1.0
        far = int(np.argmax(residual))
        labels[far] = j
        centroids[j] = points[far]


def _lloyd(points: np.ndarray, k: int, seed: int, max_iter: int) -> KMeansResult:
    centroids, _ = kmeans_plusplus(points, n_clusters=k, random_state=seed)
    centroids = np.array(centroids, dtype=np.float64)
    labels = np.argmin(cdist(points, centroids, metric='sqeuclidean'), axis=1)
    _repair_empty(points, centroids, labels, k)

    trace: List[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for j in range(k):
            centroids[j] = points[labels == j].mean(axis=0)
        inertia = _inertia(points, centroids, labels)
        if trace and inertia > trace[-1] + INERTIA_TOL:
            raise NumericError(
                f"k-means inertia increased from {trace[-1]:.12g} to {inertia:.12g}",
                {'iteration': n_iter},
            )
        trace.append(inertia)

        distances = cdist(points, centroids, metric='sqeuclidean')
        new_labels = np.argmin(distances, axis=1)
        # keep the current label on exact ties so the assignment cannot cycle
        current = distances[np.arange(len(labels)), labels]
        new_labels = np.where(distances[np.arange(len(labels)), new_labels] < current, new_labels, labels)
        _repair_empty(points, centroids, new_labels, k)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    return KMeansResult(labels=labels, inertia=trace[-1], centroids=centroids,
                        n_iter=n_iter, inertia_trace=trace)


def restart_seeds(seed: int, restarts: int) -> List[int]:
    """Per-restart seeds derived up front so parallel and sequential runs agree"""
    children = np.random.SeedSequence(seed).spawn(restarts)
    return [int(child.generate_state(1)[0]) for child in children]


def kmeans(points: np.ndarray, k: int, restarts: int = 20, seed: int = 0,
           max_iter: int = 300, n_jobs: int = 1) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia"""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    n = points.shape[0]
    if k < 1 or k > n:
        raise DimensionError(f"Cannot form {k} clusters from {n} points")
    if restarts < 1:
        raise DimensionError(f"Need at least one restart, got {restarts}")
    if not np.all(np.isfinite(points)):
        raise NumericError("k-means input has non-finite entries")

    seeds = restart_seeds(seed, restarts)
    if n_jobs > 1 and restarts > 1:
        runs = Parallel(n_jobs=n_jobs, prefer='threads')(
            delayed(_lloyd)(points, k, s, max_iter) for s in seeds
        )
    else:
        runs = [_lloyd(points, k, s, max_iter) for s in seeds]

    # first minimum wins, matching the sequential order
    best = min(range(len(runs)), key=lambda r: runs[r].inertia)
    return runs[best]


def assign_clusters(Ustar: OrthonormalFactor, c: int, config) -> np.ndarray:
    """Row-normalize (when configured) then restarted k-means"""
    points = row_normalize(Ustar) if config.row_normalize else np.array(Ustar.values)
    result = kmeans(points, c, restarts=config.restarts, seed=config.seed,
                    max_iter=config.kmeans_max_iter, n_jobs=config.n_jobs)
    logger.debug(f"k-means: inertia={result.inertia:.6g} after {result.n_iter} iterations")
    return as_label_vector(result.labels, c)
