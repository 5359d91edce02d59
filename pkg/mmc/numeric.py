"""
MMC - Numeric Core
Deterministic dense symmetric eigen-decomposition and polar orthogonalization

Every eigenvector column follows one sign convention: the entry of largest
absolute value is non-negative (lowest row index wins ties). Eigenvalue ties
keep the solver's own order, so repeated calls are bitwise identical.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .errors import DegenerateMappingError, DimensionError, NumericError

ORTHONORMAL_TOL = 1e-8
RANK_TOL = 1e-10


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class SymmetricMatrix:
    """Real symmetric n x n matrix, symmetrized on construction"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionError(f"Expected a square matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericError("Symmetric matrix has non-finite entries")
        object.__setattr__(self, 'values', _frozen((values + values.T) / 2.0))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class OrthonormalFactor:
    """n x c matrix with orthonormal columns (latent feature matrix)"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] > values.shape[0] or values.shape[1] < 1:
            raise DimensionError(f"Expected an n x c factor with 1 <= c <= n, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericError("Factor has non-finite entries")
        drift = np.linalg.norm(values.T @ values - np.eye(values.shape[1]))
        if drift > ORTHONORMAL_TOL:
            raise NumericError(f"Columns are not orthonormal (drift {drift:.3e})")
        object.__setattr__(self, 'values', _frozen(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def c(self) -> int:
        return self.values.shape[1]

    def gram(self) -> np.ndarray:
        """Linear-kernel similarity UU^T"""
        return self.values @ self.values.T


def _apply_sign_convention(vectors: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximal index, which is the tie-break we want
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return vectors * signs


def top_eigvecs(A: SymmetricMatrix, c: int) -> Tuple[OrthonormalFactor, np.ndarray]:
    """Eigenvectors of the c algebraically largest eigenvalues, descending"""
    if c < 1 or c > A.n:
        raise DimensionError(f"Cannot take {c} eigenvectors of a {A.n} x {A.n} matrix")
    if not np.all(np.isfinite(A.values)):
        raise NumericError("Eigen-decomposition input has non-finite entries")

    eigenvalues, eigenvectors = scipy.linalg.eigh(A.values)
    order = np.argsort(-eigenvalues, kind='stable')[:c]
    vectors = _apply_sign_convention(eigenvectors[:, order])
    return OrthonormalFactor(vectors), eigenvalues[order].copy()


def polar_orthogonalize(B: np.ndarray) -> np.ndarray:
    """
    Polar factor PQ^T of the thin SVD B = P S Q^T.

    The result is the semi-orthogonal matrix nearest to B in Frobenius norm;
    with r <= s its rows are orthonormal.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or min(B.shape) == 0:
        raise DimensionError(f"Expected a non-empty r x s matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise NumericError("Orthogonalization input has non-finite entries")

    P, sigma, Qt = scipy.linalg.svd(B, full_matrices=False)
    if sigma[0] == 0.0 or sigma[-1] < RANK_TOL * sigma[0]:
        raise DegenerateMappingError(
            f"Block of shape {B.shape} is rank-deficient "
            f"(smallest/largest singular value {sigma[-1]:.3e}/{sigma[0]:.3e})"
        )
    return P @ Qt


def partial_isometry(B: np.ndarray) -> np.ndarray:
    """
    Polar factor restricted to the numerical range of B.

    Keeps the singular triplets with sigma > RANK_TOL * sigma_max and returns
    P_r Q_r^T. On a full-rank B this equals polar_orthogonalize(B); on a
    rank-r B the result has r unit singular values and the rest zero.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or min(B.shape) == 0:
        raise DimensionError(f"Expected a non-empty r x s matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise NumericError("Orthogonalization input has non-finite entries")

    P, sigma, Qt = scipy.linalg.svd(B, full_matrices=False)
    if sigma[0] == 0.0:
        raise DegenerateMappingError(f"Block of shape {B.shape} is zero")
    rank = int(np.count_nonzero(sigma > RANK_TOL * sigma[0]))
    return P[:, :rank] @ Qt[:rank]


def subspace_distance(U: OrthonormalFactor, V: OrthonormalFactor) -> float:
    """Projection distance ||UU^T - VV^T||_F / sqrt(2); zero iff spans coincide"""
    if U.n != V.n:
        raise DimensionError(f"Factors have {U.n} and {V.n} rows")
    # ||UU^T - VV^T||_F^2 = c_u + c_v - 2 ||U^T V||_F^2, computed without n x n products
    overlap = np.linalg.norm(U.values.T @ V.values) ** 2
    return float(np.sqrt(max(U.c + V.c - 2.0 * overlap, 0.0) / 2.0))
