"""
Shared builders for tests
"""

import numpy as np

from mmc.data import build_problem, generate_synthetic
from mmc.kernels import ViewData, ViewKind, view_laplacian
from mmc.numeric import OrthonormalFactor, SymmetricMatrix
from mmc.optimizer import MmcProblem


def random_orthonormal(rng, n, c):
    q, _ = np.linalg.qr(rng.standard_normal((n, c)))
    return OrthonormalFactor(q)


def random_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    return SymmetricMatrix(A + A.T)


def feature_problem(X, c, alpha=0.1):
    """Single source, single feature view"""
    L = view_laplacian(ViewData(ViewKind.FEATURES, X, 0, 0))
    return MmcProblem(laplacians=[[L]], cluster_counts=[c], view_weights=[[alpha]])


def synthetic_problem(spec, config=None):
    synth = generate_synthetic(spec)
    return build_problem(synth.dataset, config), synth
