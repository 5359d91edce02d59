"""
MMC - Graph Kernels
Per-view kernel matrices and normalized graph Laplacians
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DegenerateBandwidthError, DimensionError, DisconnectedInstanceError, NumericError,
)
from .numeric import SymmetricMatrix

logger = logging.getLogger(__name__)

DEGREE_FLOOR = 1e-12
SYMMETRY_TOL = 1e-8


class ViewKind(Enum):
    """How a view's matrix is interpreted"""
    FEATURES = "features"
    SIMILARITY = "similarity"


@dataclass(frozen=True)
class ViewData:
    """One view of one source: raw features (n x d) or a similarity matrix (n x n)"""
    kind: ViewKind
    matrix: np.ndarray
    source_index: int
    view_index: int
    name: Optional[str] = None

    @property
    def n(self) -> int:
        return int(np.asarray(self.matrix).shape[0])


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric non-negative similarity matrix"""
    values: np.ndarray
    clamped_entries: int = 0

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _as_features(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionError(f"Expected an n x d feature matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise DimensionError(f"Need at least 2 instances, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise NumericError("Feature matrix has non-finite entries")
    return X


def median_pairwise_distance(X: np.ndarray) -> float:
    """Median of the n(n-1)/2 distinct-pair Euclidean distances"""
    X = _as_features(X)
    median = float(np.median(pdist(X, metric='euclidean')))
    if median <= 0.0:
        raise DegenerateBandwidthError(
            "Median pairwise distance is zero; no usable Gaussian bandwidth",
            {'instances': X.shape[0]},
        )
    return median


def gaussian_kernel(X: np.ndarray, sigma: Optional[float] = None) -> KernelMatrix:
    """K[a][b] = exp(-||x_a - x_b||^2 / (2 sigma^2)), sigma defaults to the median distance"""
    X = _as_features(X)
    if sigma is None:
        sigma = median_pairwise_distance(X)
    elif not sigma > 0:
        raise NumericError(f"Kernel bandwidth must be positive, got {sigma}")

    squared = squareform(pdist(X, metric='sqeuclidean'))
    values = np.exp(-squared / (2.0 * sigma * sigma))
    logger.debug(f"Gaussian kernel for {X.shape[0]} instances, sigma={sigma:.6g}")
    return KernelMatrix(values)


def normalized_laplacian(K: KernelMatrix) -> SymmetricMatrix:
    """L = D^{-1/2} K D^{-1/2} with D the diagonal of row sums"""
    degrees = K.values.sum(axis=1)
    low = np.flatnonzero(degrees < DEGREE_FLOOR)
    if low.size:
        row = int(low[0])
        raise DisconnectedInstanceError(row, float(degrees[row]))

    inv_sqrt = 1.0 / np.sqrt(degrees)
    return SymmetricMatrix(K.values * np.outer(inv_sqrt, inv_sqrt))


def validate_similarity(S: np.ndarray) -> KernelMatrix:
    """Symmetrize a precomputed similarity matrix and clamp negative entries to zero"""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"Similarity matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NumericError("Similarity matrix has non-finite entries")

    asymmetry = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asymmetry > SYMMETRY_TOL:
        logger.warning(f"Similarity matrix asymmetric by {asymmetry:.3e}; symmetrizing")
    values = (S + S.T) / 2.0

    negative = values < 0
    clamped = int(np.count_nonzero(negative))
    if clamped:
        logger.warning(f"Clamped {clamped} negative similarity entries to 0")
        values = np.where(negative, 0.0, values)
    return KernelMatrix(values, clamped_entries=clamped)


def view_laplacian(view: ViewData, sigma: Optional[float] = None) -> SymmetricMatrix:
    """Kernel then normalized Laplacian for one view"""
    if view.kind is ViewKind.FEATURES:
        kernel = gaussian_kernel(view.matrix, sigma)
    else:
        kernel = validate_similarity(view.matrix)
    return normalized_laplacian(kernel)
