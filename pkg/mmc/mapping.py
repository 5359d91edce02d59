"""
MMC - Cross-Source Mapping
Incomplete, partially observed instance mappings between two sources

A MappingState holds the similarity mapping M (n_i x n_j, non-negative) and
the indicator W of known one-to-one correspondences. Known entries are 1 in M
and never change; everything else is an inferred similarity.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateMappingError, DimensionError, NumericError, OneToOneViolationError
from .numeric import OrthonormalFactor, partial_isometry, polar_orthogonalize

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class MappingState:
    """Similarity mapping M^{(i,j)} and known-entry indicator W^{(i,j)}"""
    source_i: int
    source_j: int
    M: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=np.float64, copy=True)
        W = np.array(self.W, dtype=np.float64, copy=True)
        if M.ndim != 2 or M.shape != W.shape:
            raise DimensionError(f"Mapping {M.shape} and indicator {W.shape} differ")
        if not np.all((W == 0.0) | (W == 1.0)):
            raise NumericError("Indicator entries must be 0 or 1")
        if np.any(W.sum(axis=1) > 1) or np.any(W.sum(axis=0) > 1):
            raise OneToOneViolationError(
                "Known mapping is not one-to-one",
                {'sources': (self.source_i, self.source_j)},
            )
        if not np.all(np.isfinite(M)) or np.any(M < 0):
            raise NumericError("Mapping entries must be finite and non-negative")
        if np.any(M[W == 1.0] != 1.0):
            raise NumericError("Known mapping entries must equal 1")
        M.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, 'M', M)
        object.__setattr__(self, 'W', W)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.M.shape

    @property
    def known_mask(self) -> np.ndarray:
        return self.W == 1.0

    @property
    def n_known(self) -> int:
        return int(np.count_nonzero(self.W))

    def known_pairs(self) -> List[Pair]:
        rows, cols = np.nonzero(self.W)
        return [(int(a), int(b)) for a, b in zip(rows, cols)]

    def unmapped_rows(self) -> np.ndarray:
        return np.flatnonzero(self.W.sum(axis=1) == 0)

    def unmapped_cols(self) -> np.ndarray:
        return np.flatnonzero(self.W.sum(axis=0) == 0)

    def transposed(self) -> 'MappingState':
        """M^{(j,i)} = M^{(i,j)T}"""
        return MappingState(self.source_j, self.source_i, self.M.T, self.W.T)

    def with_values(self, M: np.ndarray) -> 'MappingState':
        return MappingState(self.source_i, self.source_j, M, self.W)


def build_mapping(n_i: int, n_j: int, known_pairs: Sequence[Pair],
                  source_i: int = 0, source_j: int = 1) -> MappingState:
    """Mapping with M = W = 1 at each known pair and 0 elsewhere"""
    M = np.zeros((n_i, n_j))
    seen_rows, seen_cols = set(), set()
    for a, b in known_pairs:
        if not (0 <= a < n_i and 0 <= b < n_j):
            raise DimensionError(f"Pair ({a}, {b}) out of range for a {n_i} x {n_j} mapping")
        if a in seen_rows or b in seen_cols:
            raise OneToOneViolationError(
                f"Instance appears twice in known pairs at ({a}, {b})",
                {'sources': (source_i, source_j)},
            )
        seen_rows.add(a)
        seen_cols.add(b)
        M[a, b] = 1.0
    return MappingState(source_i, source_j, M, M.copy())


def _check_factors(state: MappingState, Ui: OrthonormalFactor, Uj: OrthonormalFactor) -> None:
    n_i, n_j = state.shape
    if Ui.n != n_i or Uj.n != n_j:
        raise DimensionError(
            f"Factors with {Ui.n} and {Uj.n} rows do not fit a {n_i} x {n_j} mapping"
        )


def estimate_unknown(state: MappingState, Ui: OrthonormalFactor, Uj: OrthonormalFactor) -> np.ndarray:
    """Transitivity estimate (Ui Ui^T) M (Uj Uj^T)"""
    _check_factors(state, Ui, Uj)
    core = Ui.values.T @ state.M @ Uj.values
    return Ui.values @ core @ Uj.values.T


def _uniform_block(state: MappingState, rows: np.ndarray, cols: np.ndarray) -> MappingState:
    M = np.array(state.M)
    M[np.ix_(rows, cols)] = 1.0 / cols.size
    return state.with_values(M)


def _with_unknown_block(state: MappingState, rows: np.ndarray, cols: np.ndarray,
                        block: np.ndarray) -> MappingState:
    # known entries kept, unmapped block written, mixed entries zero
    M = np.where(state.known_mask, state.M, 0.0)
    M[np.ix_(rows, cols)] = block
    return state.with_values(M)


def _isometric_block(state: MappingState, Ui: OrthonormalFactor, Uj: OrthonormalFactor,
                     rows: np.ndarray, cols: np.ndarray) -> Optional[np.ndarray]:
    block = estimate_unknown(state, Ui, Uj)[np.ix_(rows, cols)]
    try:
        orthogonal = polar_orthogonalize(block)
    except DegenerateMappingError:
        # transitivity estimates have rank <= c, so large blocks land here
        try:
            orthogonal = partial_isometry(block)
        except DegenerateMappingError:
            return None
    negative = int(np.count_nonzero(orthogonal < 0))
    if negative:
        logger.debug(
            f"Sources {state.source_i}-{state.source_j}: clamped {negative} negative similarities"
        )
    return np.maximum(orthogonal, 0.0)


def init_unknown_block(state: MappingState, Ui: OrthonormalFactor, Uj: OrthonormalFactor) -> MappingState:
    """
    Initialize the unknown block from the known bridges.

    The transitivity estimate of M, restricted to unmapped rows x
    unmapped columns, is replaced by its polar factor and clamped at zero. A
    rank-deficient estimate keeps the polar factor of its numerical range.
    Without any known pair, or when the estimate vanishes, a uniform block
    with unit row sums is used.
    """
    _check_factors(state, Ui, Uj)
    rows, cols = state.unmapped_rows(), state.unmapped_cols()
    if rows.size == 0 or cols.size == 0:
        return state

    if state.n_known == 0:
        logger.warning(
            f"No known pairs between sources {state.source_i} and {state.source_j}; "
            f"using a uniform {rows.size} x {cols.size} block"
        )
        return _uniform_block(state, rows, cols)

    block = _isometric_block(state, Ui, Uj, rows, cols)
    if block is None:
        logger.warning(
            f"Sources {state.source_i}-{state.source_j}: transitivity estimate vanishes on the "
            f"unmapped block; using a uniform block"
        )
        return _uniform_block(state, rows, cols)
    return _with_unknown_block(state, rows, cols, block)


def update_mapping(state: MappingState, Ui: OrthonormalFactor, Uj: OrthonormalFactor) -> MappingState:
    """M <- W o M + (1 - W) o M~, negative inferred similarities clamped to 0"""
    estimate = estimate_unknown(state, Ui, Uj)
    blended = np.where(state.known_mask, state.M, estimate)
    negative = int(np.count_nonzero(blended < 0))
    if negative:
        logger.debug(
            f"Sources {state.source_i}-{state.source_j}: clamped {negative} negative similarities"
        )
    return state.with_values(np.maximum(blended, 0.0))


def update_mapping_orthogonal(state: MappingState, Ui: OrthonormalFactor,
                              Uj: OrthonormalFactor) -> MappingState:
    """
    Transitivity update that keeps M block-diagonal and semi-orthogonal.

    The estimate of the current M on unmapped rows x unmapped columns goes
    through the same orthogonalization as init_unknown_block; entries that
    link a mapped instance to an unmapped one stay zero. Unlike update_mapping,
    the inferred block keeps unit singular values from round to round.
    """
    _check_factors(state, Ui, Uj)
    rows, cols = state.unmapped_rows(), state.unmapped_cols()
    if rows.size == 0 or cols.size == 0:
        return state

    block = _isometric_block(state, Ui, Uj, rows, cols)
    if block is None:
        logger.warning(
            f"Sources {state.source_i}-{state.source_j}: transitivity estimate vanishes on the "
            f"unmapped block; keeping the previous block"
        )
        return state
    return _with_unknown_block(state, rows, cols, block)


def mapping_delta(old: MappingState, new: MappingState) -> float:
    """||M_new - M_old||_F / max(1, ||M_old||_F)"""
    if old.shape != new.shape:
        raise DimensionError(f"Mapping shapes {old.shape} and {new.shape} differ")
    return float(np.linalg.norm(new.M - old.M) / max(1.0, np.linalg.norm(old.M)))


def subsample_pairs(pairs: Sequence[Pair], fraction: float, seed: int) -> List[Pair]:
    """floor(fraction * m) pairs drawn without replacement, original order kept"""
    if not 0.0 <= fraction <= 1.0:
        raise NumericError(f"Known fraction must lie in [0, 1], got {fraction}")
    keep = int(np.floor(fraction * len(pairs) + 1e-9))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(pairs), size=keep, replace=False))
    return [tuple(pairs[i]) for i in chosen]
