"""
Image I/O

Reads and writes binary portable graymaps (P5, maxval 255). Occlusion masks use
the same container with pixel values 0 and 255.
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from config.config import PGM_MAXVAL
from ..utils.atomic_io import atomic_write_bytes
from .errors import ImageFormatError, TruncatedImageError, UnsupportedMaxvalError
from .types import GrayImage, OcclusionMask

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_MAGIC = b"P5"


def _parse_header(data: bytes, path: PathLike) -> Tuple[int, int, int, int]:
    """Return (width, height, maxval, payload_offset) of a P5 header."""
    if data[:2] != _MAGIC or len(data) < 3 or not data[2:3].isspace():
        raise ImageFormatError(f"{path}: not a binary P5 graymap (magic {data[:2]!r})")

    pos = 2
    tokens = []
    while len(tokens) < 3:
        if pos >= len(data):
            raise ImageFormatError(f"{path}: header ends after {len(tokens)} of 3 fields")
        char = data[pos:pos + 1]
        if char.isspace():
            pos += 1
            continue
        if char == b"#":
            newline = data.find(b"\n", pos)
            if newline < 0:
                raise ImageFormatError(f"{path}: unterminated header comment")
            pos = newline + 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: non-numeric header field {char!r}")
        tokens.append(int(data[start:pos]))

    # Exactly one whitespace byte separates maxval from the payload
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"{path}: missing whitespace after maxval")
    width, height, maxval = tokens
    if width <= 0 or height <= 0:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    return width, height, maxval, pos + 1


def _read_pixels(path: PathLike) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    width, height, maxval, offset = _parse_header(data, path)
    if maxval != PGM_MAXVAL:
        raise UnsupportedMaxvalError(f"{path}: maxval {maxval} is not supported (expected {PGM_MAXVAL})")

    expected = width * height
    available = len(data) - offset
    if available < expected:
        raise TruncatedImageError(
            f"{path}: payload has {available} bytes, header promises {expected} ({width}x{height})"
        )
    if available > expected:
        logger.warning(f"{path}: ignoring {available - expected} trailing bytes")
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset).reshape(height, width)


def _encode(pixels: np.ndarray) -> bytes:
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def read_image(path: PathLike) -> GrayImage:
    """
    Read a binary P5 graymap.

    Raises:
        FileNotFoundError: path does not exist
        ImageFormatError: malformed header
        UnsupportedMaxvalError: maxval other than 255
        TruncatedImageError: payload shorter than width x height
    """
    image = GrayImage(_read_pixels(path))
    logger.debug(f"Read {image.width}x{image.height} image from {path}")
    return image


def write_image(image: GrayImage, path: PathLike) -> Path:
    """Write a GrayImage as a binary P5 graymap; read_image inverts it exactly."""
    return atomic_write_bytes(path, _encode(image.pixels))


def read_mask(path: PathLike) -> OcclusionMask:
    """Read an occlusion mask stored as a P5 graymap with values {0, 255}."""
    pixels = _read_pixels(path)
    if not np.isin(pixels, (0, 255)).all():
        raise ImageFormatError(f"{path}: mask pixels must be 0 or 255")
    return OcclusionMask(pixels == 255)


def write_mask(mask: OcclusionMask, path: PathLike) -> Path:
    """Write an occlusion mask as a P5 graymap with values {0, 255}."""
    return atomic_write_bytes(path, _encode(np.where(mask.bits, 255, 0).astype(np.uint8)))
