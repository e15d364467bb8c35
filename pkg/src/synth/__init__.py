"""
Synthetic Data Package

Seeded generator of iris-like images, masks, geometry and embeddings whose
distortion severity is known, used to exercise the whole pipeline.
"""

from .generator import (
    DistortionSpec,
    SynthConfig,
    ClassPrototype,
    SyntheticSample,
    SyntheticIrisGenerator,
    severity,
    sample_distortion,
    sample_stream,
    gen_class,
    gen_sample,
    gen_dataset,
    MANIFEST_NAME,
)

__all__ = [
    'DistortionSpec',
    'SynthConfig',
    'ClassPrototype',
    'SyntheticSample',
    'SyntheticIrisGenerator',
    'severity',
    'sample_distortion',
    'sample_stream',
    'gen_class',
    'gen_sample',
    'gen_dataset',
    'MANIFEST_NAME',
]
