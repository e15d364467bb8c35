"""
Domain Types

Immutable value types shared by every other package: images, grids, feature maps,
iris geometry, occlusion masks, embeddings and the dataset record.
"""

import math
import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from config.config import MIN_IMAGE_SIDE, EMBEDDING_NORM_TOLERANCE
from .errors import (
    DimensionMismatchError,
    GeometryError,
    ManifestError,
    ValidationError,
)

SPLITS = ("train", "test")


def _frozen_array(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel image stored as a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"GrayImage needs a 2-D array, got shape {arr.shape}")
        height, width = arr.shape
        if width < MIN_IMAGE_SIDE or height < MIN_IMAGE_SIDE:
            raise ValidationError(
                f"GrayImage must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {width}x{height}"
            )
        if arr.dtype != np.uint8:
            if not np.all(np.isfinite(arr)):
                raise ValidationError("GrayImage pixels must be finite")
            if arr.min() < 0 or arr.max() > 255 or not np.array_equal(arr, np.round(arr)):
                raise ValidationError("GrayImage pixels must be integers in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen_array(arr))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        """Build from a row-major flat sequence of intensities."""
        flat = np.asarray(values)
        if flat.size != width * height:
            raise DimensionMismatchError(
                f"Expected {width * height} pixels for {width}x{height}, got {flat.size}"
            )
        return cls(flat.reshape(height, width))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RealGrid:
    """Real-valued (height, width) grid; used for heatmaps and mask targets."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"RealGrid needs a 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("RealGrid values must be finite")
        object.__setattr__(self, "values", _frozen_array(arr))

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    def validate_heatmap(self) -> "RealGrid":
        """Check the heatmap contract: values in [0, 1] with a positive sum."""
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValidationError("Heatmap values must lie in [0, 1]")
        if not self.values.sum() > 0.0:
            raise ValidationError("Heatmap must have a strictly positive sum")
        return self

    def __eq__(self, other):
        if not isinstance(other, RealGrid):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Real tensor of shape (height, width, channels)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] < 1:
            raise DimensionMismatchError(f"FeatureMap needs shape (h, w, c>=1), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("FeatureMap values must be finite")
        object.__setattr__(self, "values", _frozen_array(arr))

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def channels(self) -> int:
        return int(self.values.shape[2])


@dataclass(frozen=True)
class IrisGeometry:
    """Pupil and iris circles in pixel coordinates."""

    pupil_center: Tuple[float, float]
    pupil_radius: float
    iris_center: Tuple[float, float]
    iris_radius: float

    def __post_init__(self):
        values = (*self.pupil_center, self.pupil_radius, *self.iris_center, self.iris_radius)
        if len(values) != 6 or not all(math.isfinite(float(v)) for v in values):
            raise GeometryError(f"Geometry values must be finite numbers: {values}")
        if self.pupil_radius <= 0 or self.iris_radius <= 0:
            raise GeometryError("Pupil and iris radii must be positive")
        if self.pupil_radius >= self.iris_radius:
            raise GeometryError(
                f"Pupil radius {self.pupil_radius} must be smaller than iris radius {self.iris_radius}"
            )
        object.__setattr__(self, "pupil_center", (float(self.pupil_center[0]), float(self.pupil_center[1])))
        object.__setattr__(self, "iris_center", (float(self.iris_center[0]), float(self.iris_center[1])))
        object.__setattr__(self, "pupil_radius", float(self.pupil_radius))
        object.__setattr__(self, "iris_radius", float(self.iris_radius))

    def check_within(self, width: int, height: int) -> "IrisGeometry":
        """Raise GeometryError unless both circles fit inside a width x height image."""
        for name, (cx, cy), radius in (
            ("pupil", self.pupil_center, self.pupil_radius),
            ("iris", self.iris_center, self.iris_radius),
        ):
            if cx - radius < 0 or cy - radius < 0 or cx + radius > width or cy + radius > height:
                raise GeometryError(
                    f"{name} circle at ({cx}, {cy}) r={radius} exceeds {width}x{height} image"
                )
        return self

    def _center_distance(self, center, width: int, height: int) -> np.ndarray:
        ys, xs = np.mgrid[0:height, 0:width]
        return np.hypot(xs + 0.5 - center[0], ys + 0.5 - center[1])

    def annulus(self, width: int, height: int) -> np.ndarray:
        """Pixels whose centers lie at distance [pupil_radius, iris_radius) from the iris center."""
        dist = self._center_distance(self.iris_center, width, height)
        return (dist >= self.pupil_radius) & (dist < self.iris_radius)

    def pupil_disc(self, width: int, height: int) -> np.ndarray:
        return self._center_distance(self.pupil_center, width, height) < self.pupil_radius

    def scaled(self, factor: float) -> "IrisGeometry":
        return IrisGeometry(
            pupil_center=(self.pupil_center[0] * factor, self.pupil_center[1] * factor),
            pupil_radius=self.pupil_radius * factor,
            iris_center=(self.iris_center[0] * factor, self.iris_center[1] * factor),
            iris_radius=self.iris_radius * factor,
        )

    def to_dict(self) -> Dict:
        return {
            "pupil_center": list(self.pupil_center),
            "pupil_radius": self.pupil_radius,
            "iris_center": list(self.iris_center),
            "iris_radius": self.iris_radius,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IrisGeometry":
        try:
            return cls(
                pupil_center=tuple(data["pupil_center"]),
                pupil_radius=data["pupil_radius"],
                iris_center=tuple(data["iris_center"]),
                iris_radius=data["iris_radius"],
            )
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestError(f"Invalid geometry {data!r}: {e}") from e


@dataclass(frozen=True, eq=False)
class OcclusionMask:
    """Binary usable-iris map: True marks a usable iris pixel."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"OcclusionMask needs a 2-D array, got shape {arr.shape}")
        if arr.dtype != bool:
            if not np.isin(arr, (0, 1)).all():
                raise ValidationError("OcclusionMask bits must be 0 or 1")
            arr = arr.astype(bool)
        object.__setattr__(self, "bits", _frozen_array(arr))

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    def validate_against(self, geometry: IrisGeometry) -> "OcclusionMask":
        """Every usable bit must fall inside the iris annulus of the geometry."""
        outside = self.bits & ~geometry.annulus(self.width, self.height)
        if outside.any():
            raise GeometryError(f"{int(outside.sum())} usable mask pixels lie outside the iris annulus")
        return self

    def __eq__(self, other):
        if not isinstance(other, OcclusionMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    __hash__ = None


class Embedding:
    """
    Unit-norm feature vector produced by a recognition algorithm.

    Values are divided by their Euclidean norm at construction. Passing
    normalize=False keeps the values verbatim after checking they are already
    unit norm, which lets stored embeddings reload bit-exactly.
    """

    __slots__ = ("_values",)

    def __init__(self, values, normalize: bool = True):
        arr = np.array(values, dtype=np.float64).ravel()
        if arr.size == 0:
            raise DimensionMismatchError("Embedding must have at least one component")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("Embedding values must be finite")
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ValidationError("Embedding with zero norm cannot be normalized")
        if normalize:
            arr = arr / norm
        elif abs(norm - 1.0) > EMBEDDING_NORM_TOLERANCE:
            raise ValidationError(f"Embedding norm {norm} is not 1 within {EMBEDDING_NORM_TOLERANCE}")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return int(self._values.size)

    def dot(self, other: "Embedding") -> float:
        if self.dim != other.dim:
            raise DimensionMismatchError(f"Embedding dims differ: {self.dim} vs {other.dim}")
        return float(np.dot(self._values, other._values))

    def __neg__(self) -> "Embedding":
        return Embedding(-self._values, normalize=False)

    def tolist(self):
        return [float(v) for v in self._values]

    def __eq__(self, other):
        if not isinstance(other, Embedding):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    __hash__ = None

    def __repr__(self):
        return f"Embedding(dim={self.dim})"


@dataclass(frozen=True)
class SampleRecord:
    """One eye image with its identity, annotations, embedding and scores."""

    sample_id: str
    class_id: str
    image_path: str
    geometry: IrisGeometry
    occlusion_path: str
    embedding: Embedding
    is_enrollment: bool
    dfs_label: Optional[float] = None
    predicted_quality: Optional[float] = None
    severity: Optional[float] = None
    is_ideal: Optional[bool] = None
    split: Optional[str] = None
    factors: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sample_id:
            raise ManifestError("sample_id must be a non-empty string")
        for name in ("dfs_label", "predicted_quality"):
            value = getattr(self, name)
            if value is not None:
                if not (0.0 <= float(value) <= 1.0):
                    raise ManifestError(f"{self.sample_id}: {name} {value} outside [0, 1]")
                object.__setattr__(self, name, float(value))
        if self.is_enrollment and self.dfs_label is not None and self.dfs_label != 1.0:
            raise ManifestError(f"{self.sample_id}: enrollment record must have dfs_label 1.0")
        if self.severity is not None:
            if not float(self.severity) >= 0.0:
                raise ManifestError(f"{self.sample_id}: severity must be non-negative")
            object.__setattr__(self, "severity", float(self.severity))
        if self.split is not None and self.split not in SPLITS:
            raise ManifestError(f"{self.sample_id}: split must be one of {SPLITS}, got {self.split!r}")
        factors = {str(k): float(v) for k, v in sorted(dict(self.factors).items())}
        if not all(math.isfinite(v) for v in factors.values()):
            raise ManifestError(f"{self.sample_id}: factor values must be finite")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "is_enrollment", bool(self.is_enrollment))

    def with_updates(self, **changes) -> "SampleRecord":
        """Return a copy with the given fields replaced."""
        return dataclasses.replace(self, **changes)
