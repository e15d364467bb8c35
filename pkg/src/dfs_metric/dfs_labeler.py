"""
DFS Labeling

Distance-in-feature-space quality labels: each probe is scored by how close its
embedding lies to the embedding of its class enrollment image.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from sklearn.model_selection import GroupShuffleSplit

from ..core_model.errors import ConfigError, DimensionMismatchError, ValidationError
from ..core_model.manifest import check_unique_ids, enrollment_index
from ..core_model.types import Embedding, SampleRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledDataset:
    """Records with dfs_label populated plus the class to enrollment mapping."""
    records: List[SampleRecord]
    enrollment_index: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for record in self.records:
            if record.dfs_label is None:
                raise ValidationError(f"{record.sample_id}: missing dfs_label")

    def labels(self) -> np.ndarray:
        return np.array([r.dfs_label for r in self.records], dtype=np.float64)


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two unit embeddings, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"Embedding dims differ: {a.dim} vs {b.dim}")
    return float(np.clip(a.dot(b), -1.0, 1.0))


def dfs_label(probe: Embedding, enrollment: Embedding) -> float:
    """Quality label in [0, 1]: (cosine + 1) / 2, 1 meaning identical to enrollment."""
    return (cosine_similarity(probe, enrollment) + 1.0) / 2.0


def match_score(probe: Embedding, gallery: Embedding) -> float:
    """Verification score of the recognizer: cosine similarity of the embeddings."""
    return cosine_similarity(probe, gallery)


def build_labels(records: Sequence[SampleRecord]) -> LabeledDataset:
    """
    Label every record against its class enrollment.

    Raises:
        EnrollmentError: a class has zero or several enrollments
    """
    records = list(records)
    check_unique_ids(records)
    enrollments = enrollment_index(records)

    labeled = []
    for record in records:
        if record.is_enrollment:
            label = 1.0
        else:
            label = dfs_label(record.embedding, enrollments[record.class_id].embedding)
        labeled.append(record.with_updates(dfs_label=label))

    index = {class_id: enrollment.sample_id for class_id, enrollment in enrollments.items()}
    logger.info(f"Labeled {len(labeled)} records across {len(index)} classes")
    return LabeledDataset(records=labeled, enrollment_index=index)


def split_by_class(records: Sequence[SampleRecord], test_fraction: float = 0.3,
                   seed: int = 0) -> List[SampleRecord]:
    """
    Assign whole classes to a train or test split.

    Each side keeps its own enrollments, so labels and score pairs stay valid
    within a split. Deterministic for a seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    records = list(records)
    classes = sorted({r.class_id for r in records})
    if len(classes) < 2:
        raise ValidationError("Splitting by class needs at least 2 classes")

    # Split over class ids, not samples, so the split does not depend on class sizes
    class_positions = np.arange(len(classes))
    splitter = GroupShuffleSplit(n_splits=1, test_size=test_fraction, random_state=seed)
    train_idx, test_idx = next(splitter.split(class_positions, groups=class_positions))
    test_classes = {classes[i] for i in test_idx}
    if not len(train_idx) or not test_classes:
        raise ConfigError(f"test_fraction {test_fraction} leaves one side without classes")

    logger.info(f"Split {len(classes)} classes: {len(train_idx)} train, {len(test_classes)} test")
    return [r.with_updates(split="test" if r.class_id in test_classes else "train") for r in records]
