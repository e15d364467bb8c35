"""
DFS Metric Package

Ground-truth quality labels from embedding similarity to the class enrollment.
"""

from .dfs_labeler import (
    LabeledDataset,
    cosine_similarity,
    dfs_label,
    match_score,
    build_labels,
    split_by_class,
)

__all__ = [
    'LabeledDataset',
    'cosine_similarity',
    'dfs_label',
    'match_score',
    'build_labels',
    'split_by_class',
]
