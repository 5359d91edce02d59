"""
Unit tests for synthetic data generation
"""

import numpy as np
import pytest

from mmc.config import MmcConfig
from mmc.data import generate_synthetic
from mmc.metrics import nmi
from mmc.optimizer import fit
from mmc.validation import SynthSpec
from tests.helpers import feature_problem


class TestGenerateSynthetic:
    """Test generate_synthetic"""

    def test_shapes(self):
        synth = generate_synthetic(SynthSpec(n_sources=3, n_views=[1, 2, 3], n=30, dim=5, seed=2))
        assert [len(s.views) for s in synth.dataset.sources] == [1, 2, 3]
        for source in synth.dataset.sources:
            assert all(v.matrix.shape == (30, 5) for v in source.views)
        assert sorted(synth.dataset.pairs) == [(0, 1), (0, 2), (1, 2)]

    def test_balanced_labels(self):
        synth = generate_synthetic(SynthSpec(n=30, n_clusters=3, seed=4))
        for labels in synth.truth:
            assert np.bincount(labels).tolist() == [10, 10, 10]

    def test_deterministic(self):
        spec = SynthSpec(n=25, seed=9)
        first, second = generate_synthetic(spec), generate_synthetic(spec)
        for a, b in zip(first.dataset.sources, second.dataset.sources):
            for va, vb in zip(a.views, b.views):
                np.testing.assert_array_equal(va.matrix, vb.matrix)
        assert first.dataset.pairs == second.dataset.pairs

    def test_seed_changes_data(self):
        first = generate_synthetic(SynthSpec(n=25, seed=1))
        second = generate_synthetic(SynthSpec(n=25, seed=2))
        assert not np.array_equal(first.dataset.sources[0].views[0].matrix,
                                  second.dataset.sources[0].views[0].matrix)

    @pytest.mark.parametrize("known,overlap,expected", [
        (0.6, 1.0, 120),
        (0.5, 0.5, 50),
        (0.3, 0.5, 30),
        (0.0, 1.0, 0),
    ])
    def test_known_pair_count(self, known, overlap, expected):
        synth = generate_synthetic(SynthSpec(n=200, known_fraction=known, overlap_fraction=overlap))
        assert len(synth.dataset.pairs[(0, 1)]) == expected
        assert len(synth.true_pairs[(0, 1)]) == synth.n_shared

    def test_full_mapping_is_permutation(self):
        synth = generate_synthetic(SynthSpec(n=20, known_fraction=1.0, overlap_fraction=1.0))
        pairs = synth.dataset.pairs[(0, 1)]
        P = np.zeros((20, 20))
        for a, b in pairs:
            P[a, b] = 1.0
        np.testing.assert_array_equal(P.sum(axis=0), np.ones(20))
        np.testing.assert_array_equal(P.sum(axis=1), np.ones(20))

    def test_known_pairs_share_classes(self):
        synth = generate_synthetic(SynthSpec(n=60, known_fraction=0.7, overlap_fraction=0.5))
        la, lb = synth.truth
        for a, b in synth.true_pairs[(0, 1)]:
            assert la[a] == lb[b]
        assert set(synth.dataset.pairs[(0, 1)]) <= set(synth.true_pairs[(0, 1)])

    def test_noise_free_views_are_separable(self):
        synth = generate_synthetic(SynthSpec(n_sources=1, n_views=2, n=30, n_clusters=3,
                                             separation=3.0, noise=0.0, seed=5))
        source = synth.dataset.sources[0]
        for view in source.views:
            result = fit(feature_problem(view.matrix, 3), MmcConfig(restarts=5, max_inner=10))
            assert nmi(result.labels[0], source.labels) == 1.0
