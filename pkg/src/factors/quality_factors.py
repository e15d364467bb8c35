"""
Hand-crafted Quality Factors

Sharpness (Tenengrad), iris size, dilation, gray level spread and usable area.
These are the single-factor baselines the DFS predictor is compared against.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Dict

import numpy as np
from scipy import ndimage, stats

from ..core_model.errors import DimensionMismatchError, EmptyAnnulusError
from ..core_model.types import GrayImage, IrisGeometry, OcclusionMask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorReport:
    """The five factor values of one sample."""
    sharpness: float
    iris_size: float
    dilation: float
    gray_level_spread: float
    usable_area: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def sharpness(image: GrayImage) -> float:
    """
    Tenengrad focus measure: mean Sobel gradient magnitude over the image.

    Borders use replicate padding.
    """
    intensity = image.as_float()
    grad_x = ndimage.sobel(intensity, axis=1, mode="nearest")
    grad_y = ndimage.sobel(intensity, axis=0, mode="nearest")
    return float(np.mean(np.hypot(grad_x, grad_y)))


def iris_size(geometry: IrisGeometry) -> float:
    """Number of pixels across the iris radius."""
    return float(geometry.iris_radius)


def dilation(geometry: IrisGeometry) -> float:
    """Pupil to iris radius ratio, in (0, 1)."""
    return geometry.pupil_radius / geometry.iris_radius


def _annulus(geometry: IrisGeometry, width: int, height: int) -> np.ndarray:
    annulus = geometry.annulus(width, height)
    if not annulus.any():
        raise EmptyAnnulusError(f"Iris annulus is empty for {geometry} on a {width}x{height} grid")
    return annulus


def gray_level_spread(image: GrayImage, geometry: IrisGeometry) -> float:
    """Shannon entropy in bits of the 256-bin histogram of iris annulus pixels."""
    annulus = _annulus(geometry, image.width, image.height)
    histogram = np.bincount(image.pixels[annulus], minlength=256)
    return float(stats.entropy(histogram, base=2))


def usable_area(mask: OcclusionMask, geometry: IrisGeometry) -> float:
    """Fraction of the iris annulus that is not occluded."""
    annulus = _annulus(geometry, mask.width, mask.height)
    return float(np.count_nonzero(mask.bits & annulus)) / float(np.count_nonzero(annulus))


def factor_report(image: GrayImage, geometry: IrisGeometry, mask: OcclusionMask) -> FactorReport:
    """Compute all five factors for one sample."""
    if (mask.width, mask.height) != (image.width, image.height):
        raise DimensionMismatchError(
            f"Mask {mask.width}x{mask.height} does not match image {image.width}x{image.height}"
        )
    return FactorReport(
        sharpness=sharpness(image),
        iris_size=iris_size(geometry),
        dilation=dilation(geometry),
        gray_level_spread=gray_level_spread(image, geometry),
        usable_area=usable_area(mask, geometry),
    )
