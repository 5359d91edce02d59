"""
MMC - Synthetic Data
Planted-cluster multi-source multi-view problems with partially known mappings
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..kernels import ViewData, ViewKind
from ..mapping import subsample_pairs
from ..validation import SynthSpec
from .loader import MultiSourceDataset, SourceData

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass
class SyntheticProblem:
    """Generated dataset with its ground truth"""
    dataset: MultiSourceDataset
    truth: List[np.ndarray]
    true_pairs: Dict[Tuple[int, int], List[Pair]]
    n_shared: int


def generate_synthetic(spec: SynthSpec) -> SyntheticProblem:
    """
    Every source holds the first `n_shared` entities plus its own private ones,
    listed in a random order of its own. Entity cluster ids are balanced and
    identical wherever the entity appears. Each view draws its own centers;
    an instance is its cluster center plus isotropic Gaussian noise.
    """
    rng = np.random.default_rng(spec.seed)
    n, c, K = spec.n, spec.n_clusters, spec.n_sources
    n_shared = spec.n_shared
    # local entity index e < n_shared is shared; the rest are private to the source
    entity_labels = np.arange(n) % c

    sources: List[SourceData] = []
    positions: List[np.ndarray] = []
    for k in range(K):
        order = rng.permutation(n)
        where = np.empty(n, dtype=np.int64)
        where[order] = np.arange(n)
        positions.append(where)
        labels = entity_labels[order]

        views = []
        for i in range(spec.views_of(k)):
            centers = spec.separation * rng.standard_normal((c, spec.dim))
            X = centers[labels] + spec.noise * rng.standard_normal((n, spec.dim))
            views.append(ViewData(ViewKind.FEATURES, X, k, i, f"view{i}"))
        sources.append(SourceData(f"source{k}", views, labels.astype(np.int64)))

    true_pairs: Dict[Tuple[int, int], List[Pair]] = {}
    known: Dict[Tuple[int, int], List[Pair]] = {}
    for a in range(K):
        for b in range(a + 1, K):
            pairs = sorted((int(positions[a][e]), int(positions[b][e])) for e in range(n_shared))
            true_pairs[(a, b)] = pairs
            known[(a, b)] = subsample_pairs(pairs, spec.known_fraction, int(rng.integers(2 ** 31)))

    logger.info(
        f"Generated {K} sources x {n} instances, {n_shared} shared, "
        f"{int(spec.known_fraction * n_shared + 1e-9)} known pairs per source pair"
    )
    dataset = MultiSourceDataset(sources, known, [c] * K)
    return SyntheticProblem(dataset, [s.labels for s in sources], true_pairs, n_shared)
