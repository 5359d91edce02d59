"""
MMC - Data
Dataset files and synthetic problems
"""

from .loader import (
    SourceData, MultiSourceDataset, load_matrix, save_matrix, load_pairs,
    save_pairs, load_labels, save_labels, build_problem, read_dataset,
    load_dataset, write_dataset,
)
from .synthetic import SyntheticProblem, generate_synthetic

__all__ = [
    'SourceData', 'MultiSourceDataset', 'load_matrix', 'save_matrix',
    'load_pairs', 'save_pairs', 'load_labels', 'save_labels', 'build_problem',
    'read_dataset', 'load_dataset', 'write_dataset',
    'SyntheticProblem', 'generate_synthetic',
]
