"""
MMC - Evaluation Metrics
NMI, the mean-of-runs NMI protocol, and inferred-mapping accuracy
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr
from sklearn.metrics.cluster import contingency_matrix

from .clustering import as_label_vector, kmeans, restart_seeds, row_normalize
from .errors import DimensionError
from .mapping import MappingState
from .numeric import OrthonormalFactor


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts of two labelings"""
    counts: np.ndarray
    n: int


@dataclass(frozen=True)
class MappingAccuracy:
    """Class agreement of the most similar partner for each unmapped instance"""
    unmapped: int
    matches: int
    accuracy: float


def contingency_table(a, b) -> ContingencyTable:
    a, b = as_label_vector(a), as_label_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"Label vectors have lengths {a.size} and {b.size}")
    if a.size == 0:
        raise DimensionError("Label vectors are empty")
    counts = contingency_matrix(a, b)
    return ContingencyTable(counts=counts, n=int(a.size))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return -math.fsum(p * np.log(p))


def nmi(a, b) -> float:
    """I(a;b) / sqrt(H(a) H(b)) with natural-log entropies"""
    table = contingency_table(a, b)
    counts, n = table.counts, table.n
    rows, cols = counts.sum(axis=1), counts.sum(axis=0)
    h_a, h_b = _entropy(rows, n), _entropy(cols, n)

    if h_a == 0.0 or h_b == 0.0:
        # two single-cluster labelings are identical up to permutation
        return 1.0 if h_a == h_b else 0.0
    if counts.shape[0] == counts.shape[1] and np.all(np.count_nonzero(counts, axis=0) == 1) \
            and np.all(np.count_nonzero(counts, axis=1) == 1):
        return 1.0

    ii, jj = np.nonzero(counts)
    joint = counts[ii, jj].astype(np.float64)
    # fsum is exactly rounded, so nmi(a, b) == nmi(b, a) bit for bit
    mi = math.fsum((joint / n) * np.log(joint * n / (rows[ii] * cols[jj])))
    return float(min(max(mi / math.sqrt(h_a * h_b), 0.0), 1.0))


def mean_nmi_protocol(Ustar: OrthonormalFactor, c: int, truth, runs: int = 20,
                      seed: int = 0, row_normalized: bool = True,
                      max_iter: int = 300) -> Tuple[float, float]:
    """Mean and sample std of NMI over `runs` independent single-restart k-means"""
    if runs < 1:
        raise DimensionError(f"Need at least one run, got {runs}")
    truth = as_label_vector(truth)
    points = row_normalize(Ustar) if row_normalized else np.array(Ustar.values)
    scores = [
        nmi(kmeans(points, c, restarts=1, seed=run_seed, max_iter=max_iter).labels, truth)
        for run_seed in restart_seeds(seed, runs)
    ]
    std = float(np.std(scores, ddof=1)) if runs > 1 else 0.0
    return float(np.mean(scores)), std


def mapping_inference_accuracy(state: MappingState, labels_i, labels_j) -> MappingAccuracy:
    """For each unmapped row, does the most similar unmapped column share its class?"""
    labels_i, labels_j = as_label_vector(labels_i), as_label_vector(labels_j)
    n_i, n_j = state.shape
    if labels_i.size != n_i or labels_j.size != n_j:
        raise DimensionError(
            f"Labels of lengths {labels_i.size}/{labels_j.size} do not fit a {n_i} x {n_j} mapping"
        )

    rows = state.unmapped_rows()
    if rows.size == 0:
        return MappingAccuracy(unmapped=0, matches=0, accuracy=1.0)
    cols = state.unmapped_cols()
    if cols.size == 0:
        cols = np.arange(n_j)

    # argmax keeps the lowest column index on ties
    partners = cols[np.argmax(state.M[np.ix_(rows, cols)], axis=1)]
    matches = int(np.count_nonzero(labels_i[rows] == labels_j[partners]))
    return MappingAccuracy(unmapped=int(rows.size), matches=matches,
                           accuracy=matches / rows.size)


def inferred_mapping_block(state: MappingState, labels_i, labels_j) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unknown block among unmapped instances, rows and columns sorted by class"""
    labels_i, labels_j = as_label_vector(labels_i), as_label_vector(labels_j)
    rows, cols = state.unmapped_rows(), state.unmapped_cols()
    rows = rows[np.argsort(labels_i[rows], kind='stable')]
    cols = cols[np.argsort(labels_j[cols], kind='stable')]
    return state.M[np.ix_(rows, cols)], rows, cols


def trend_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation ignoring NaN pairs; NaN when undefined"""
    xs, ys = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    keep = np.isfinite(xs) & np.isfinite(ys)
    if np.count_nonzero(keep) < 2:
        return float('nan')
    rho = spearmanr(xs[keep], ys[keep]).statistic
    return float(rho)
