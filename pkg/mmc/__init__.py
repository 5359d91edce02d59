"""
MMC - Multi-source Multi-view Clustering
Collective spectral clustering across sources with incomplete instance mappings
"""

__version__ = "0.1.0"
__author__ = "MMC Team"

from .errors import (
    MmcError, DimensionError, NumericError, DegenerateBandwidthError,
    DisconnectedInstanceError, DegenerateMappingError, OneToOneViolationError,
    DegenerateConsensusError, DataFormatError, ConfigError, FitError,
)
from .numeric import (
    SymmetricMatrix, OrthonormalFactor, top_eigvecs, polar_orthogonalize,
    partial_isometry, subspace_distance,
)
from .kernels import (
    ViewKind, ViewData, KernelMatrix, median_pairwise_distance, gaussian_kernel,
    normalized_laplacian, validate_similarity, view_laplacian,
)
from .mapping import (
    MappingState, build_mapping, estimate_unknown, init_unknown_block,
    update_mapping, update_mapping_orthogonal, mapping_delta, subsample_pairs,
)
from .config import MmcConfig, load_config
from .optimizer import (
    MmcProblem, MmcState, MmcResult, TracePoint, ComponentIterations,
    MmcSolver, init_view_factor, init_consensus, update_view_factor,
    update_consensus, objective, fit,
)
from .clustering import KMeansResult, row_normalize, kmeans, assign_clusters
from .metrics import (
    ContingencyTable, MappingAccuracy, contingency_table, nmi,
    mean_nmi_protocol, mapping_inference_accuracy, inferred_mapping_block,
    trend_correlation,
)

__all__ = [
    'MmcError', 'DimensionError', 'NumericError', 'DegenerateBandwidthError',
    'DisconnectedInstanceError', 'DegenerateMappingError', 'OneToOneViolationError',
    'DegenerateConsensusError', 'DataFormatError', 'ConfigError', 'FitError',
    'SymmetricMatrix', 'OrthonormalFactor', 'top_eigvecs', 'polar_orthogonalize',
    'partial_isometry', 'subspace_distance',
    'ViewKind', 'ViewData', 'KernelMatrix', 'median_pairwise_distance',
    'gaussian_kernel', 'normalized_laplacian', 'validate_similarity', 'view_laplacian',
    'MappingState', 'build_mapping', 'estimate_unknown', 'init_unknown_block',
    'update_mapping', 'update_mapping_orthogonal', 'mapping_delta', 'subsample_pairs',
    'MmcConfig', 'load_config',
    'MmcProblem', 'MmcState', 'MmcResult', 'TracePoint', 'ComponentIterations',
    'MmcSolver', 'init_view_factor', 'init_consensus', 'update_view_factor',
    'update_consensus', 'objective', 'fit',
    'KMeansResult', 'row_normalize', 'kmeans', 'assign_clusters',
    'ContingencyTable', 'MappingAccuracy', 'contingency_table', 'nmi',
    'mean_nmi_protocol', 'mapping_inference_accuracy', 'inferred_mapping_block',
    'trend_correlation',
]
