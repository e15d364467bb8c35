"""
Shared builders for test records, geometries and embeddings.
"""

import numpy as np

from src.core_model.types import Embedding, IrisGeometry, SampleRecord


def make_geometry(center=(32.0, 24.0), pupil_radius=6.0, iris_radius=16.0):
    return IrisGeometry(center, pupil_radius, center, iris_radius)


def make_record(sample_id, class_id, embedding, is_enrollment=False, **extra):
    if not isinstance(embedding, Embedding):
        embedding = Embedding(embedding)
    return SampleRecord(
        sample_id=sample_id,
        class_id=class_id,
        image_path=f"images/{sample_id}.pgm",
        geometry=extra.pop("geometry", make_geometry()),
        occlusion_path=f"masks/{sample_id}_mask.pgm",
        embedding=embedding,
        is_enrollment=is_enrollment,
        **extra,
    )


def random_records(rng, n_classes=5, per_class=4, dim=16, noise=0.5):
    """Records of n_classes classes; sample 0 of each class is its enrollment."""
    records = []
    for c in range(n_classes):
        base = rng.standard_normal(dim)
        for s in range(per_class):
            values = base if s == 0 else base + noise * rng.standard_normal(dim)
            records.append(make_record(f"c{c}_s{s}", f"c{c}", values, is_enrollment=s == 0))
    return records
