"""
Core Model Package

Domain types, graymap image I/O and the dataset manifest shared by all packages.
"""

from .errors import (
    IrisQualityError,
    ValidationError,
    ImageFormatError,
    UnsupportedMaxvalError,
    TruncatedImageError,
    ManifestError,
    DuplicateSampleError,
    EnrollmentError,
    GeometryError,
    EmptyAnnulusError,
    DimensionMismatchError,
    ConfigError,
    UndefinedCorrelationError,
    NumericError,
)
from .types import GrayImage, RealGrid, FeatureMap, IrisGeometry, OcclusionMask, Embedding, SampleRecord
from .image_io import read_image, write_image, read_mask, write_mask
from .manifest import load_manifest, save_manifest, enrollment_index, resolve_path, rebase_paths

__all__ = [
    'IrisQualityError',
    'ValidationError',
    'ImageFormatError',
    'UnsupportedMaxvalError',
    'TruncatedImageError',
    'ManifestError',
    'DuplicateSampleError',
    'EnrollmentError',
    'GeometryError',
    'EmptyAnnulusError',
    'DimensionMismatchError',
    'ConfigError',
    'UndefinedCorrelationError',
    'NumericError',
    'GrayImage',
    'RealGrid',
    'FeatureMap',
    'IrisGeometry',
    'OcclusionMask',
    'Embedding',
    'SampleRecord',
    'read_image',
    'write_image',
    'read_mask',
    'write_mask',
    'load_manifest',
    'save_manifest',
    'enrollment_index',
    'resolve_path',
    'rebase_paths',
]
