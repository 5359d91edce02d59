"""
Pytest configuration and fixtures
"""

import numpy as np
import pytest

from mmc.config import MmcConfig
from mmc.validation import SynthSpec


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep MMC_* variables from the shell out of the settings model"""
    import os
    for key in list(os.environ):
        if key.startswith('MMC_'):
            monkeypatch.delenv(key)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fast_config():
    """Small caps so end-to-end fits stay quick"""
    return MmcConfig(max_inner=30, max_outer=15, restarts=5, nmi_runs=5)


@pytest.fixture
def two_blobs(rng):
    """Two tight 2-D blobs of 10 points, far apart; truth labels 0/1"""
    X = np.vstack([rng.normal(0.0, 0.1, (10, 2)), rng.normal(10.0, 0.1, (10, 2))])
    return X, np.repeat([0, 1], 10)


@pytest.fixture
def small_synth():
    """Easy 2-source, 2-view plan"""
    return SynthSpec(n_sources=2, n_views=2, n=40, n_clusters=2, dim=4,
                     separation=4.0, noise=0.5, known_fraction=0.5, seed=7)
