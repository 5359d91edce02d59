"""
MMC - Collective Spectral Optimizer
Alternating maximization of the multi-source multi-view objective

    O = sum_k sum_i [ tr(U_i^kT L_i^k U_i^k) + alpha_i^k tr(U_i^k U_i^kT U^k* U^k*T) ]
      + sum_{i<j} beta^(i,j) tr(U^j* U^j*T M^(i,j)T U^i* U^i*T M^(i,j))

Each factor update takes the top eigenvectors of a modified Laplacian, which
is the exact maximizer of O with every other block held fixed, so O never
decreases inside an inner loop. Mapping updates between inner loops may move O
in either direction.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .clustering import assign_clusters
from .config import MmcConfig
from .errors import DegenerateConsensusError, DimensionError, FitError, MmcError, NumericError
from .mapping import (
    MappingState, init_unknown_block, mapping_delta, update_mapping, update_mapping_orthogonal,
)
from .numeric import OrthonormalFactor, SymmetricMatrix, top_eigvecs

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-8

PairKey = Tuple[int, int]


@dataclass
class MmcProblem:
    """Assembled multi-source instance: view Laplacians, cluster counts, weights, mappings"""
    laplacians: List[List[SymmetricMatrix]]
    cluster_counts: List[int]
    view_weights: List[List[float]]
    pair_weights: Dict[PairKey, float] = field(default_factory=dict)
    mappings: Dict[PairKey, MappingState] = field(default_factory=dict)
    source_names: Optional[List[str]] = None

    def __post_init__(self):
        K = len(self.laplacians)
        if K < 1:
            raise DimensionError("Problem needs at least one source")
        if len(self.cluster_counts) != K or len(self.view_weights) != K:
            raise DimensionError(f"Cluster counts and view weights must cover all {K} sources")
        for k, views in enumerate(self.laplacians):
            if not views:
                raise DimensionError(f"Source {k} has no views")
            n_k = views[0].n
            if any(L.n != n_k for L in views):
                raise DimensionError(f"Views of source {k} disagree on instance count")
            if not 1 <= self.cluster_counts[k] <= n_k:
                raise DimensionError(f"Source {k}: need 1 <= c <= {n_k}, got {self.cluster_counts[k]}")
            if len(self.view_weights[k]) != len(views):
                raise DimensionError(f"Source {k}: {len(views)} views but {len(self.view_weights[k])} weights")
            if any(not (np.isfinite(a) and a >= 0) for a in self.view_weights[k]):
                raise NumericError(f"Source {k}: view weights must be finite and non-negative")

        canonical: Dict[PairKey, MappingState] = {}
        for (i, j), state in self.mappings.items():
            if i == j or not (0 <= i < K and 0 <= j < K):
                raise DimensionError(f"Invalid source pair ({i}, {j})")
            if i > j:
                i, j, state = j, i, state.transposed()
            if state.shape != (self.n(i), self.n(j)):
                raise DimensionError(f"Mapping ({i}, {j}) has shape {state.shape}")
            canonical[(i, j)] = MappingState(i, j, state.M, state.W)
        self.mappings = canonical

        weights: Dict[PairKey, float] = {}
        for (i, j), beta in self.pair_weights.items():
            key = (min(i, j), max(i, j))
            if not (np.isfinite(beta) and beta >= 0):
                raise NumericError(f"Pair weight for {key} must be finite and non-negative")
            if key in weights and weights[key] != beta:
                raise NumericError(f"Pair weights for {key} are not symmetric")
            weights[key] = float(beta)
        self.pair_weights = weights

        if self.source_names is None:
            self.source_names = [f"source{k}" for k in range(K)]

    @property
    def n_sources(self) -> int:
        return len(self.laplacians)

    def n(self, k: int) -> int:
        return self.laplacians[k][0].n

    def beta(self, i: int, j: int) -> float:
        return self.pair_weights.get((min(i, j), max(i, j)), 0.0)

    def mapping_from(self, k: int, j: int, mappings: Dict[PairKey, MappingState]) -> Optional[np.ndarray]:
        """M^(k,j) oriented rows=source k, or None when the pair has no mapping"""
        if k < j:
            state = mappings.get((k, j))
            return None if state is None else state.M
        state = mappings.get((j, k))
        return None if state is None else state.M.T

    def active_pairs(self) -> List[PairKey]:
        """Pairs that couple their sources: a mapping and a positive weight"""
        return sorted(key for key in self.mappings if self.beta(*key) > 0)

    def components(self) -> List[List[int]]:
        """Groups of sources connected through active pairs, in ascending order"""
        K = self.n_sources
        pairs = self.active_pairs()
        graph = coo_matrix(
            (np.ones(len(pairs)), ([i for i, _ in pairs], [j for _, j in pairs])), shape=(K, K)
        )
        _, membership = connected_components(graph, directed=False)
        groups: Dict[int, List[int]] = {}
        for k in range(K):
            groups.setdefault(int(membership[k]), []).append(k)
        return sorted(groups.values(), key=lambda g: g[0])


@dataclass(frozen=True)
class TracePoint:
    """Objective value at one point of the double loop"""
    component: int
    outer_iter: int
    inner_iter: int
    objective: float


@dataclass
class ComponentIterations:
    """Iteration bookkeeping for one group of coupled sources"""
    sources: List[int]
    outer_iters: int = 0
    inner_iters: List[int] = field(default_factory=list)
    converged: bool = False
    mapping_deltas: List[float] = field(default_factory=list)


@dataclass
class MmcState:
    """Current factors and mappings, owned by one fit"""
    view_factors: List[List[Optional[OrthonormalFactor]]]
    consensus: List[Optional[OrthonormalFactor]]
    mappings: Dict[PairKey, MappingState]
    objective_trace: List[TracePoint] = field(default_factory=list)
    outer_iter: int = 0
    inner_iters: List[int] = field(default_factory=list)


@dataclass
class MmcResult:
    """Consensus factors, labels, inferred mappings and convergence record"""
    consensus: List[OrthonormalFactor]
    labels: List[np.ndarray]
    mappings: Dict[PairKey, MappingState]
    objective_trace: List[TracePoint]
    iterations: List[ComponentIterations]
    wall_time: float = 0.0

    @property
    def outer_iters(self) -> int:
        return max(it.outer_iters for it in self.iterations)

    @property
    def inner_iters(self) -> int:
        return sum(sum(it.inner_iters) for it in self.iterations)

    @property
    def converged(self) -> bool:
        return all(it.converged for it in self.iterations)


def init_view_factor(L: SymmetricMatrix, c: int) -> OrthonormalFactor:
    """Single-view spectral solution: top-c eigenvectors of L"""
    factor, _ = top_eigvecs(L, c)
    return factor


def init_consensus(view_factors: Sequence[OrthonormalFactor], alphas: Sequence[float], c: int) -> OrthonormalFactor:
    """Top-c eigenvectors of sum_i alpha_i U_i U_i^T"""
    if len(view_factors) != len(alphas):
        raise DimensionError(f"{len(view_factors)} factors but {len(alphas)} weights")
    if all(alpha == 0 for alpha in alphas):
        raise DegenerateConsensusError("All view weights are zero; consensus Laplacian vanishes")
    n = view_factors[0].n
    if any(U.n != n for U in view_factors):
        raise DimensionError("View factors disagree on instance count")

    total = np.zeros((n, n))
    for U, alpha in zip(view_factors, alphas):
        total += alpha * U.gram()
    return init_view_factor(SymmetricMatrix(total), c)


def update_view_factor(L: SymmetricMatrix, alpha: float, Ustar: OrthonormalFactor, c: int) -> OrthonormalFactor:
    """Top-c eigenvectors of L + alpha U* U*^T"""
    if Ustar.n != L.n:
        raise DimensionError(f"Consensus has {Ustar.n} rows, Laplacian is {L.n} x {L.n}")
    if alpha == 0:
        return init_view_factor(L, c)
    return init_view_factor(SymmetricMatrix(L.values + alpha * Ustar.gram()), c)


def consensus_laplacian(problem: MmcProblem, state: MmcState, k: int) -> SymmetricMatrix:
    """
    L^k* = sum_i alpha_i^k U_i^k U_i^kT + sum_{j != k} beta^(k,j) M^(k,j) U^j* U^j*T M^(k,j)T

    Each unordered pair enters O once with weight beta, so tr(U^k*T L^k* U^k*)
    collects exactly the terms of O that depend on U^k*.
    """
    n_k = problem.n(k)
    total = np.zeros((n_k, n_k))
    for U, alpha in zip(state.view_factors[k], problem.view_weights[k]):
        total += alpha * U.gram()

    for j in range(problem.n_sources):
        if j == k:
            continue
        beta = problem.beta(k, j)
        M = problem.mapping_from(k, j, state.mappings)
        if beta == 0 or M is None or state.consensus[j] is None:
            continue
        projected = M @ state.consensus[j].values
        total += beta * (projected @ projected.T)
    return SymmetricMatrix(total)


def update_consensus(problem: MmcProblem, state: MmcState, k: int) -> OrthonormalFactor:
    """Top-c_k eigenvectors of the consensus Laplacian L^k*"""
    if all(alpha == 0 for alpha in problem.view_weights[k]) and not any(
        problem.beta(k, j) > 0 for j in range(problem.n_sources) if j != k
    ):
        raise DegenerateConsensusError(f"Source {k} has no positive view or pair weight")
    return init_view_factor(consensus_laplacian(problem, state, k), problem.cluster_counts[k])


def objective(problem: MmcProblem, state: MmcState, sources: Optional[Sequence[int]] = None) -> float:
    """O restricted to `sources` (all sources by default)"""
    sources = list(range(problem.n_sources)) if sources is None else list(sources)
    members = set(sources)
    terms: List[float] = []
    for k in sources:
        Ustar = state.consensus[k].values
        for L, U, alpha in zip(problem.laplacians[k], state.view_factors[k], problem.view_weights[k]):
            Uv = U.values
            terms.append(float(np.trace(Uv.T @ L.values @ Uv)))
            terms.append(alpha * float(np.linalg.norm(Uv.T @ Ustar) ** 2))

    for (i, j), state_ij in state.mappings.items():
        if i not in members or j not in members:
            continue
        beta = problem.beta(i, j)
        if beta == 0:
            continue
        # tr(Uj Uj^T M^T Ui Ui^T M) = ||Ui^T M Uj||_F^2
        cross = state.consensus[i].values.T @ state_ij.M @ state.consensus[j].values
        terms.append(beta * float(np.linalg.norm(cross) ** 2))
    return float(np.sum(terms))


class MmcSolver:
    """Runs the alternating optimization, one group of coupled sources at a time"""

    def __init__(self, problem: MmcProblem, config: Optional[MmcConfig] = None):
        self.logger = logging.getLogger(__name__)
        self.problem = problem
        self.config = config or MmcConfig()
        self.state = MmcState(
            view_factors=[[None] * len(views) for views in problem.laplacians],
            consensus=[None] * problem.n_sources,
            mappings=dict(problem.mappings),
        )

    def fit(self) -> MmcResult:
        """Initialize, run the double loop per component, then cluster every source"""
        started = time.perf_counter()
        iterations = []
        for index, sources in enumerate(self.problem.components()):
            iterations.append(self._fit_component(index, sources))

        labels = []
        for k in range(self.problem.n_sources):
            try:
                labels.append(assign_clusters(self.state.consensus[k], self.problem.cluster_counts[k], self.config))
            except MmcError as e:
                raise FitError("k-means failed", e, source=k)

        return MmcResult(
            consensus=list(self.state.consensus),
            labels=labels,
            mappings=dict(self.state.mappings),
            objective_trace=list(self.state.objective_trace),
            iterations=iterations,
            wall_time=time.perf_counter() - started,
        )

    def _fit_component(self, index: int, sources: List[int]) -> ComponentIterations:
        problem, state, config = self.problem, self.state, self.config
        pairs = [p for p in problem.active_pairs() if p[0] in sources]
        record = ComponentIterations(sources=list(sources))
        self.logger.info(f"Component {index}: sources {sources}, {len(pairs)} coupled pairs")

        self._initialize(sources, pairs)

        for outer in range(1, config.max_outer + 1):
            state.outer_iter = outer
            current = self._record(index, outer, 0, sources)
            sweeps = 0
            for inner in range(1, config.max_inner + 1):
                self._sweep(sources, outer, inner)
                sweeps = inner
                previous, current = current, self._record(index, outer, inner, sources)
                if current < previous - MONOTONE_TOL:
                    self.logger.warning(
                        f"Objective decreased inside inner loop: {previous:.12g} -> {current:.12g} "
                        f"(outer {outer}, inner {inner})"
                    )
                change = abs(current - previous) / max(1.0, abs(previous))
                self.logger.debug(f"outer {outer} inner {inner}: O={current:.10g} rel.change={change:.3e}")
                if change < config.inner_tol:
                    break
            else:
                self.logger.warning(f"Inner loop hit max_inner={config.max_inner} (outer {outer})")
            record.inner_iters.append(sweeps)
            state.inner_iters.append(sweeps)
            record.outer_iters = outer

            if not pairs:
                record.converged = True
                break

            delta = self._update_mappings(pairs, outer)
            record.mapping_deltas.append(delta)
            self.logger.info(f"Component {index} outer {outer}: O={current:.10g}, max mapping delta={delta:.3e}")
            if delta < config.outer_tol:
                record.converged = True
                break
        else:
            self.logger.warning(f"Component {index}: outer loop hit max_outer={config.max_outer}")
        return record

    def _initialize(self, sources: List[int], pairs: List[PairKey]) -> None:
        problem, state = self.problem, self.state
        for k in sources:
            c = problem.cluster_counts[k]
            for i, L in enumerate(problem.laplacians[k]):
                try:
                    state.view_factors[k][i] = init_view_factor(L, c)
                except MmcError as e:
                    raise FitError("View factor initialization failed", e, source=k, view=i)
            try:
                state.consensus[k] = init_consensus(state.view_factors[k], problem.view_weights[k], c)
            except MmcError as e:
                raise FitError("Consensus initialization failed", e, source=k)

        for i, j in pairs:
            try:
                state.mappings[(i, j)] = init_unknown_block(
                    state.mappings[(i, j)], state.consensus[i], state.consensus[j]
                )
            except MmcError as e:
                raise FitError("Mapping initialization failed", e, source=(i, j))

    def _sweep(self, sources: List[int], outer: int, inner: int) -> None:
        problem, state, config = self.problem, self.state, self.config
        jobs = [(k, i) for k in sources for i in range(len(problem.laplacians[k]))]

        def solve(k: int, i: int) -> OrthonormalFactor:
            try:
                return update_view_factor(problem.laplacians[k][i], problem.view_weights[k][i],
                                          state.consensus[k], problem.cluster_counts[k])
            except MmcError as e:
                raise FitError("View factor update failed", e, source=k, view=i, outer=outer, inner=inner)

        # view factors only read the consensus, so they are independent of each other
        if config.n_jobs > 1 and len(jobs) > 1:
            factors = Parallel(n_jobs=config.n_jobs, prefer='threads')(delayed(solve)(k, i) for k, i in jobs)
        else:
            factors = [solve(k, i) for k, i in jobs]
        for (k, i), factor in zip(jobs, factors):
            state.view_factors[k][i] = factor

        for k in sources:
            try:
                state.consensus[k] = update_consensus(problem, state, k)
            except MmcError as e:
                raise FitError("Consensus update failed", e, source=k, outer=outer, inner=inner)

    def _update_mappings(self, pairs: List[PairKey], outer: int) -> float:
        state = self.state
        update = update_mapping_orthogonal if self.config.orthogonal_mappings else update_mapping
        largest = 0.0
        for i, j in pairs:
            old = state.mappings[(i, j)]
            try:
                new = update(old, state.consensus[i], state.consensus[j])
            except MmcError as e:
                raise FitError("Mapping update failed", e, source=(i, j), outer=outer)
            if not np.array_equal(old.W * old.M, new.W * new.M):
                raise FitError("Mapping update failed",
                               NumericError("Known mapping entries changed"), source=(i, j), outer=outer)
            state.mappings[(i, j)] = new
            delta = mapping_delta(old, new)
            self.logger.debug(f"Mapping {i}-{j}: delta={delta:.3e}")
            largest = max(largest, delta)
        return largest

    def _record(self, component: int, outer: int, inner: int, sources: List[int]) -> float:
        value = objective(self.problem, self.state, sources)
        if not np.isfinite(value):
            raise FitError("Objective evaluation failed",
                           NumericError("Objective is not finite"), outer=outer, inner=inner)
        self.state.objective_trace.append(TracePoint(component, outer, inner, value))
        return value


def fit(problem: MmcProblem, config: Optional[MmcConfig] = None) -> MmcResult:
    """Run MMC end to end"""
    return MmcSolver(problem, config).fit()
