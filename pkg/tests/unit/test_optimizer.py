"""
Unit tests for the collective spectral optimizer
"""

import numpy as np
import pytest

from mmc.config import MmcConfig
from mmc.errors import DegenerateConsensusError, DimensionError, FitError, NumericError
from mmc.mapping import build_mapping
from mmc.metrics import nmi
from mmc.numeric import OrthonormalFactor, SymmetricMatrix, subspace_distance, top_eigvecs
from mmc.optimizer import (
    MmcProblem, MmcSolver, MmcState, consensus_laplacian, fit, init_consensus,
    init_view_factor, objective, update_consensus, update_view_factor,
)
from tests.helpers import feature_problem, random_orthonormal, random_symmetric, synthetic_problem


def _block_laplacian(sizes):
    n = sum(sizes)
    K = np.zeros((n, n))
    start = 0
    for size in sizes:
        K[start:start + size, start:start + size] = 1.0 / size
        start += size
    return SymmetricMatrix(K)


def _state_for(problem, view_factors, consensus, mappings=None):
    return MmcState(view_factors=view_factors, consensus=consensus,
                    mappings=dict(problem.mappings if mappings is None else mappings))


class TestMmcProblem:
    """Test MmcProblem validation"""

    def test_defaults(self, rng):
        L = random_symmetric(rng, 5)
        problem = MmcProblem([[L]], [2], [[0.1]])
        assert problem.n_sources == 1
        assert problem.source_names == ['source0']
        assert problem.components() == [[0]]

    def test_too_many_clusters(self, rng):
        with pytest.raises(DimensionError):
            MmcProblem([[random_symmetric(rng, 3)]], [4], [[0.1]])

    def test_weight_count_mismatch(self, rng):
        with pytest.raises(DimensionError):
            MmcProblem([[random_symmetric(rng, 3)]], [1], [[0.1, 0.2]])

    def test_negative_weight(self, rng):
        with pytest.raises(NumericError):
            MmcProblem([[random_symmetric(rng, 3)]], [1], [[-0.1]])

    def test_views_disagree_on_size(self, rng):
        with pytest.raises(DimensionError):
            MmcProblem([[random_symmetric(rng, 3), random_symmetric(rng, 4)]], [1], [[0.1, 0.1]])

    def test_mapping_canonicalized(self, rng):
        Ls = [[random_symmetric(rng, 3)], [random_symmetric(rng, 4)]]
        reverse = build_mapping(4, 3, [(0, 2)], source_i=1, source_j=0)
        problem = MmcProblem(Ls, [1, 1], [[0.1], [0.1]], {(1, 0): 1.0}, {(1, 0): reverse})
        assert list(problem.mappings) == [(0, 1)]
        assert problem.mappings[(0, 1)].known_pairs() == [(2, 0)]
        assert problem.beta(1, 0) == problem.beta(0, 1) == 1.0

    def test_mapping_shape_checked(self, rng):
        Ls = [[random_symmetric(rng, 3)], [random_symmetric(rng, 4)]]
        with pytest.raises(DimensionError):
            MmcProblem(Ls, [1, 1], [[0.1], [0.1]], {}, {(0, 1): build_mapping(3, 3, [])})

    def test_components_follow_positive_weights(self, rng):
        Ls = [[random_symmetric(rng, 3)] for _ in range(3)]
        mappings = {(0, 1): build_mapping(3, 3, []), (1, 2): build_mapping(3, 3, [])}
        problem = MmcProblem(Ls, [1, 1, 1], [[0.1]] * 3, {(0, 1): 1.0, (1, 2): 0.0}, mappings)
        assert problem.components() == [[0, 1], [2]]


class TestInitialization:
    """Test init_view_factor and init_consensus"""

    def test_block_diagonal_laplacian(self):
        L = _block_laplacian([3, 4])
        U = init_view_factor(L, 2)
        assert np.trace(U.values.T @ L.values @ U.values) == pytest.approx(2.0, abs=1e-8)

    def test_full_basis(self, rng):
        L = random_symmetric(rng, 5)
        U = init_view_factor(L, 5)
        assert np.trace(U.values.T @ L.values @ U.values) == pytest.approx(np.trace(L.values), abs=1e-10)

    def test_consensus_single_view(self, rng):
        U = random_orthonormal(rng, 8, 3)
        assert subspace_distance(init_consensus([U], [1.0], 3), U) < 1e-6

    def test_consensus_identical_views(self, rng):
        U = random_orthonormal(rng, 8, 3)
        Ustar = init_consensus([U, U], [0.1, 0.1], 3)
        assert subspace_distance(Ustar, U) < 1e-6
        _, values = top_eigvecs(SymmetricMatrix(0.1 * U.gram() + 0.1 * U.gram()), 3)
        np.testing.assert_allclose(values, [0.2, 0.2, 0.2], atol=1e-12)

    def test_consensus_prefers_heavier_view(self):
        e = np.eye(6)
        U1, U2 = OrthonormalFactor(e[:, :2]), OrthonormalFactor(e[:, 2:4])
        assert subspace_distance(init_consensus([U1, U2], [0.5, 0.2], 2), U1) < 1e-6

    def test_consensus_all_zero_weights(self, rng):
        with pytest.raises(DegenerateConsensusError):
            init_consensus([random_orthonormal(rng, 4, 2)], [0.0], 2)


class TestUpdates:
    """Test update_view_factor and update_consensus"""

    def test_zero_alpha_reduces_to_init(self, rng):
        L = random_symmetric(rng, 6)
        U = update_view_factor(L, 0.0, random_orthonormal(rng, 6, 2), 2)
        np.testing.assert_array_equal(U.values, init_view_factor(L, 2).values)

    def test_zero_laplacian_follows_consensus(self, rng):
        Ustar = random_orthonormal(rng, 7, 3)
        U = update_view_factor(SymmetricMatrix(np.zeros((7, 7))), 0.5, Ustar, 3)
        overlap = np.trace(U.values.T @ Ustar.gram() @ U.values)
        assert overlap == pytest.approx(3.0, abs=1e-8)

    def test_view_update_beats_random_search(self):
        rng = np.random.default_rng(8)
        L = random_symmetric(rng, 8)
        Ustar = random_orthonormal(rng, 8, 3)
        modified = L.values + 0.7 * Ustar.gram()
        U = update_view_factor(L, 0.7, Ustar, 3)
        best = np.trace(U.values.T @ modified @ U.values)
        for _ in range(500):
            Q = random_orthonormal(rng, 8, 3).values
            assert best >= np.trace(Q.T @ modified @ Q) - 1e-8

    def test_single_source_consensus_matches_init(self, rng):
        problem = MmcProblem([[random_symmetric(rng, 6), random_symmetric(rng, 6)]], [2], [[0.1, 0.3]])
        views = [random_orthonormal(rng, 6, 2), random_orthonormal(rng, 6, 2)]
        state = _state_for(problem, [views], [random_orthonormal(rng, 6, 2)])
        np.testing.assert_array_equal(update_consensus(problem, state, 0).values,
                                      init_consensus(views, [0.1, 0.3], 2).values)

    def test_zero_beta_matches_init(self, rng):
        Ls = [[random_symmetric(rng, 5)], [random_symmetric(rng, 5)]]
        mapping = build_mapping(5, 5, [(i, i) for i in range(5)])
        problem = MmcProblem(Ls, [2, 2], [[0.1], [0.1]], {(0, 1): 0.0}, {(0, 1): mapping})
        views = [[random_orthonormal(rng, 5, 2)], [random_orthonormal(rng, 5, 2)]]
        state = _state_for(problem, views, [random_orthonormal(rng, 5, 2), random_orthonormal(rng, 5, 2)])
        np.testing.assert_array_equal(update_consensus(problem, state, 0).values,
                                      init_consensus(views[0], [0.1], 2).values)

    def test_identity_mapping_aligns_sources(self, rng):
        L = random_symmetric(rng, 6)
        mapping = build_mapping(6, 6, [(i, i) for i in range(6)])
        problem = MmcProblem([[L], [L]], [2, 2], [[0.1], [0.1]], {(0, 1): 1.0}, {(0, 1): mapping})
        config = MmcConfig(max_inner=1, max_outer=1, restarts=2)
        solver = MmcSolver(problem, config)
        solver.fit()
        assert subspace_distance(solver.state.consensus[0], solver.state.consensus[1]) < 1e-6

    def test_consensus_laplacian_pair_weight(self, rng):
        mapping = build_mapping(4, 4, [(i, i) for i in range(4)])
        problem = MmcProblem([[random_symmetric(rng, 4)], [random_symmetric(rng, 4)]], [1, 1],
                             [[0.0], [0.0]], {(0, 1): 0.5}, {(0, 1): mapping})
        U1 = random_orthonormal(rng, 4, 1)
        state = _state_for(problem, [[U1], [U1]], [U1, U1])
        np.testing.assert_allclose(consensus_laplacian(problem, state, 0).values, 0.5 * U1.gram(), atol=1e-12)


class TestObjective:
    """Test objective"""

    def test_rayleigh_trace(self, rng):
        L = random_symmetric(rng, 6)
        problem = MmcProblem([[L]], [2], [[0.0]])
        U, values = top_eigvecs(L, 2)
        state = _state_for(problem, [[U]], [U])
        assert objective(problem, state) == pytest.approx(values.sum(), abs=1e-10)

    def test_penalty_equals_c_when_factors_coincide(self, rng):
        L = SymmetricMatrix(np.zeros((6, 6)))
        problem = MmcProblem([[L, L]], [3], [[0.5, 0.25]])
        U = random_orthonormal(rng, 6, 3)
        state = _state_for(problem, [[U, U]], [U])
        assert objective(problem, state) == pytest.approx(0.75 * 3, abs=1e-10)

    def test_zero_mapping_has_no_cross_term(self, rng):
        Ls = [[random_symmetric(rng, 4)], [random_symmetric(rng, 5)]]
        coupled = MmcProblem(Ls, [2, 2], [[0.1], [0.1]], {(0, 1): 1.0}, {(0, 1): build_mapping(4, 5, [])})
        alone = MmcProblem(Ls, [2, 2], [[0.1], [0.1]])
        views = [[random_orthonormal(rng, 4, 2)], [random_orthonormal(rng, 5, 2)]]
        consensus = [random_orthonormal(rng, 4, 2), random_orthonormal(rng, 5, 2)]
        assert objective(coupled, _state_for(coupled, views, consensus)) == \
            pytest.approx(objective(alone, _state_for(alone, views, consensus)), abs=1e-12)

    def test_cross_term_value(self):
        e = np.eye(2)
        U = OrthonormalFactor(e[:, :1])
        mapping = build_mapping(2, 2, [(0, 0)])
        L = SymmetricMatrix(np.zeros((2, 2)))
        problem = MmcProblem([[L], [L]], [1, 1], [[0.0], [0.0]], {(0, 1): 1.5}, {(0, 1): mapping})
        assert objective(problem, _state_for(problem, [[U], [U]], [U, U])) == pytest.approx(1.5)

    def test_objective_differences_follow_consensus_laplacian(self, rng):
        """Test swapping one consensus changes O by exactly the change in tr(U^T L^k* U)"""
        Ls = [[random_symmetric(rng, 6)], [random_symmetric(rng, 5)]]
        known = build_mapping(6, 5, [(0, 1), (2, 0), (4, 3)])
        mapping = known.with_values(np.where(known.known_mask, 1.0, 0.2 * rng.random((6, 5))))
        problem = MmcProblem(Ls, [2, 2], [[0.3], [0.1]], {(0, 1): 0.7}, {(0, 1): mapping})
        views = [[random_orthonormal(rng, 6, 2)], [random_orthonormal(rng, 5, 2)]]
        other = random_orthonormal(rng, 5, 2)
        first, second = random_orthonormal(rng, 6, 2), random_orthonormal(rng, 6, 2)

        state_a = _state_for(problem, views, [first, other])
        state_b = _state_for(problem, views, [second, other])
        L_star = consensus_laplacian(problem, state_a, 0).values
        expected = (np.trace(first.values.T @ L_star @ first.values)
                    - np.trace(second.values.T @ L_star @ second.values))
        assert objective(problem, state_a) - objective(problem, state_b) == pytest.approx(expected, abs=1e-10)


class TestFit:
    """Test the full alternating optimization"""

    def test_two_blobs(self, two_blobs, fast_config):
        X, truth = two_blobs
        result = fit(feature_problem(X, 2), fast_config)
        assert nmi(result.labels[0], truth) == 1.0

    def test_iteration_caps(self, two_blobs):
        X, _ = two_blobs
        result = fit(feature_problem(X, 2), MmcConfig(max_inner=1, max_outer=1, restarts=2))
        assert len(result.objective_trace) == 2
        assert [(p.outer_iter, p.inner_iter) for p in result.objective_trace] == [(1, 0), (1, 1)]
        assert result.outer_iters == 1 and result.inner_iters == 1

    def test_iteration_caps_with_coupled_sources(self, small_synth):
        problem, _ = synthetic_problem(small_synth)
        result = fit(problem, MmcConfig(max_inner=1, max_outer=1, restarts=2))
        assert len(result.objective_trace) == 2

    def test_identical_sources_agree(self, two_blobs, fast_config):
        X, _ = two_blobs
        single = feature_problem(X, 2)
        L = single.laplacians[0][0]
        mapping = build_mapping(20, 20, [(i, i) for i in range(20)])
        problem = MmcProblem([[L], [L]], [2, 2], [[0.1], [0.1]], {(0, 1): 1.0}, {(0, 1): mapping})
        result = fit(problem, fast_config)
        assert nmi(result.labels[0], result.labels[1]) == 1.0

    def test_labels_in_range(self, small_synth, fast_config):
        problem, _ = synthetic_problem(small_synth, fast_config)
        result = fit(problem, fast_config)
        for k, labels in enumerate(result.labels):
            assert labels.shape == (problem.n(k),)
            assert labels.min() >= 0 and labels.max() < problem.cluster_counts[k]

    def test_inner_loop_monotone(self, small_synth, fast_config):
        problem, _ = synthetic_problem(small_synth, fast_config)
        trace = fit(problem, fast_config).objective_trace
        for prev, cur in zip(trace, trace[1:]):
            if cur.outer_iter == prev.outer_iter and cur.component == prev.component:
                assert cur.objective >= prev.objective - 1e-8

    def test_known_entries_survive(self, small_synth, fast_config):
        problem, _ = synthetic_problem(small_synth, fast_config)
        result = fit(problem, fast_config)
        for key, original in problem.mappings.items():
            final = result.mappings[key]
            np.testing.assert_array_equal(final.W * final.M, original.W * original.M)

    def test_factors_stay_orthonormal(self, small_synth, fast_config):
        problem, _ = synthetic_problem(small_synth, fast_config)
        solver = MmcSolver(problem, fast_config)
        solver.fit()
        for U in solver.state.consensus + [U for views in solver.state.view_factors for U in views]:
            np.testing.assert_allclose(U.values.T @ U.values, np.eye(U.c), atol=1e-8)

    def test_zero_beta_decouples_sources(self, small_synth):
        config = MmcConfig(default_beta=0.0, max_inner=20, max_outer=5, restarts=3)
        problem, _ = synthetic_problem(small_synth, config)
        joint = fit(problem, config)
        for k in range(2):
            alone = MmcProblem([problem.laplacians[k]], [problem.cluster_counts[k]], [problem.view_weights[k]])
            single = fit(alone, config)
            np.testing.assert_array_equal(joint.labels[k], single.labels[0])
            np.testing.assert_array_equal(joint.consensus[k].values, single.consensus[0].values)

    def test_parallel_view_updates_match_sequential(self, small_synth):
        sequential = MmcConfig(max_inner=10, max_outer=3, restarts=3)
        problem, _ = synthetic_problem(small_synth, sequential)
        first = fit(problem, sequential)
        second = fit(problem, sequential.model_copy(update={'n_jobs': 2}))
        for a, b in zip(first.consensus, second.consensus):
            np.testing.assert_array_equal(a.values, b.values)
        assert [p.objective for p in first.objective_trace] == [p.objective for p in second.objective_trace]

    def test_deterministic(self, small_synth, fast_config):
        problem, _ = synthetic_problem(small_synth, fast_config)
        first, second = fit(problem, fast_config), fit(problem, fast_config)
        for a, b in zip(first.labels, second.labels):
            np.testing.assert_array_equal(a, b)

    def test_zero_view_weights_fail_with_context(self, rng):
        problem = MmcProblem([[random_symmetric(rng, 4)]], [2], [[0.0]])
        with pytest.raises(FitError) as exc_info:
            fit(problem, MmcConfig(restarts=1))
        assert exc_info.value.context['source'] == 0
        assert isinstance(exc_info.value.cause, DegenerateConsensusError)

    def test_orthogonal_mappings_keep_block_structure(self, small_synth, fast_config):
        """Test mapped instances gain no inferred similarities under the default update"""
        problem, _ = synthetic_problem(small_synth, fast_config)
        result = fit(problem, fast_config)
        final = result.mappings[(0, 1)]
        mapped_rows = np.flatnonzero(final.W.sum(axis=1))
        assert np.all(final.M[np.ix_(mapped_rows, final.unmapped_cols())] == 0.0)
        assert np.all(final.M[np.ix_(final.unmapped_rows(), np.flatnonzero(final.W.sum(axis=0)))] == 0.0)

    def test_dense_mappings_fill_every_unknown_entry(self, small_synth, fast_config):
        config = fast_config.model_copy(update={'orthogonal_mappings': False})
        problem, _ = synthetic_problem(small_synth, config)
        final = fit(problem, config).mappings[(0, 1)]
        mapped_rows = np.flatnonzero(final.W.sum(axis=1))
        assert np.any(final.M[np.ix_(mapped_rows, final.unmapped_cols())] > 0.0)
