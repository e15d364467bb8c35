"""
Synthetic Iris Dataset Generator

Renders iris-like eye images with controllable distortions, their geometry and
occlusion masks, and an embedding oracle whose distance to the class embedding
grows with distortion severity. Every sample draws from its own random stream
derived from (seed, class index, sample index), so generation order and
parallelism never change the output.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage
from tqdm import tqdm

from config.config import DEFAULT_IMAGE_SIZE, DEFAULT_SEED, DOWNSAMPLE_FACTOR, MIN_IMAGE_SIDE, SEVERITY_WEIGHTS
from config.logging_config import log_dataset_event
from ..core_model.errors import ConfigError, GeometryError
from ..core_model.image_io import write_image, write_mask
from ..core_model.manifest import save_manifest
from ..core_model.types import Embedding, GrayImage, IrisGeometry, OcclusionMask, SampleRecord
from ..utils.atomic_io import atomic_write_text

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
CONFIG_NAME = "synth_config.json"
TEXTURE_COMPONENTS = 6

PathLike = Union[str, Path]


@dataclass(frozen=True)
class DistortionSpec:
    """Distortions applied to one rendered sample."""
    blur_sigma: float = 0.0
    occlusion_fraction: float = 0.0
    exposure_gain: float = 1.0
    dilation_target: float = 0.45
    off_center_px: float = 0.0
    iris_scale: float = 1.0

    def validate(self) -> "DistortionSpec":
        if self.blur_sigma < 0:
            raise ConfigError(f"blur_sigma must be >= 0, got {self.blur_sigma}")
        if not 0.0 <= self.occlusion_fraction <= 1.0:
            raise ConfigError(f"occlusion_fraction must lie in [0, 1], got {self.occlusion_fraction}")
        if not self.exposure_gain > 0:
            raise ConfigError(f"exposure_gain must be > 0, got {self.exposure_gain}")
        if not 0.0 < self.dilation_target < 1.0:
            raise ConfigError(f"dilation_target must lie in (0, 1), got {self.dilation_target}")
        if self.off_center_px < 0:
            raise ConfigError(f"off_center_px must be >= 0, got {self.off_center_px}")
        if not self.iris_scale > 0:
            raise ConfigError(f"iris_scale must be > 0, got {self.iris_scale}")
        return self


@dataclass
class SynthConfig:
    """Dataset size, rendering ranges and the embedding oracle settings."""
    n_classes: int = 20
    samples_per_class: int = 20
    image_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE
    embedding_dim: int = 64
    seed: int = DEFAULT_SEED
    blur_sigma_range: Tuple[float, float] = (0.0, 3.0)
    occlusion_range: Tuple[float, float] = (0.0, 0.7)
    exposure_range: Tuple[float, float] = (0.5, 1.6)
    dilation_range: Tuple[float, float] = (0.2, 0.7)
    nominal_dilation: float = 0.45
    off_center_range: Tuple[float, float] = (0.0, 6.0)
    iris_scale_range: Tuple[float, float] = (0.9, 1.1)
    iris_radius_fraction: float = 0.375
    distortion_probability: float = 0.6
    severity_weights: Dict[str, float] = field(default_factory=lambda: dict(SEVERITY_WEIGHTS))
    severity_to_embedding_noise: float = 8.0
    separation_threshold: float = 0.5
    max_retries: int = 1000
    ideal_severity: float = 0.15

    def validate(self) -> "SynthConfig":
        if self.n_classes < 2 or self.samples_per_class < 2:
            raise ConfigError("Need n_classes >= 2 and samples_per_class >= 2")
        width, height = self.image_size
        if width % DOWNSAMPLE_FACTOR or height % DOWNSAMPLE_FACTOR:
            raise ConfigError(f"image_size {self.image_size} must be divisible by {DOWNSAMPLE_FACTOR}")
        if min(width, height) < MIN_IMAGE_SIDE:
            raise ConfigError(f"image_size {self.image_size} is smaller than {MIN_IMAGE_SIDE}")
        if self.embedding_dim < 2:
            raise ConfigError("embedding_dim must be at least 2")
        for name in ("blur_sigma_range", "occlusion_range", "exposure_range", "dilation_range",
                     "off_center_range", "iris_scale_range"):
            low, high = getattr(self, name)
            if low > high:
                raise ConfigError(f"{name} must be ordered (low <= high), got {(low, high)}")
        if self.blur_sigma_range[0] < 0 or self.off_center_range[0] < 0:
            raise ConfigError("blur and off-center ranges must be non-negative")
        if not (0.0 <= self.occlusion_range[0] and self.occlusion_range[1] <= 1.0):
            raise ConfigError("occlusion_range must lie in [0, 1]")
        if self.exposure_range[0] <= 0 or self.iris_scale_range[0] <= 0:
            raise ConfigError("exposure and scale ranges must be positive")
        if not 0.0 < self.dilation_range[0] <= self.nominal_dilation <= self.dilation_range[1] < 1.0:
            raise ConfigError("dilation_range must lie in (0, 1) and contain nominal_dilation")
        if not 0.0 < self.iris_radius_fraction <= 0.5:
            raise ConfigError("iris_radius_fraction must lie in (0, 0.5]")
        if not 0.0 <= self.distortion_probability <= 1.0:
            raise ConfigError("distortion_probability must lie in [0, 1]")
        if set(self.severity_weights) != set(SEVERITY_WEIGHTS):
            raise ConfigError(f"severity_weights needs exactly the keys {sorted(SEVERITY_WEIGHTS)}")
        if any(w < 0 for w in self.severity_weights.values()):
            raise ConfigError("severity_weights must be non-negative")
        if not self.severity_to_embedding_noise > 0:
            raise ConfigError("severity_to_embedding_noise must be positive")
        if not -1.0 < self.separation_threshold <= 1.0:
            raise ConfigError("separation_threshold must lie in (-1, 1]")
        if self.max_retries < 1:
            raise ConfigError("max_retries must be at least 1")
        return self

    def zero_distortion(self) -> DistortionSpec:
        return DistortionSpec(dilation_target=self.nominal_dilation)

    def to_dict(self) -> Dict:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "SynthConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown synth config keys: {sorted(unknown)}")
        values = {}
        for key, value in data.items():
            values[key] = tuple(value) if isinstance(value, list) else value
        return cls(**values).validate()


@dataclass(frozen=True, eq=False)
class ClassPrototype:
    """Identity of one synthetic class: texture parameters and ground-truth embedding."""
    class_index: int
    class_id: str
    embedding: Embedding
    iris_level: float
    pupil_level: float
    sclera_level: float
    eyelid_level: float
    texture: np.ndarray  # rows of (amplitude, angular freq, phase, radial freq, radial phase)

    def __eq__(self, other):
        if not isinstance(other, ClassPrototype):
            return NotImplemented
        return (
            self.class_index == other.class_index
            and self.embedding == other.embedding
            and np.array_equal(self.texture, other.texture)
            and (self.iris_level, self.pupil_level, self.sclera_level, self.eyelid_level)
            == (other.iris_level, other.pupil_level, other.sclera_level, other.eyelid_level)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SyntheticSample:
    record: SampleRecord
    image: GrayImage
    mask: OcclusionMask


def class_name(class_index: int) -> str:
    return f"c{class_index:03d}"


def sample_name(class_index: int, sample_index: int) -> str:
    return f"c{class_index:03d}_s{sample_index:03d}"


def sample_stream(seed: int, class_index: int, sample_index: int) -> np.random.Generator:
    """Independent random stream of one sample."""
    return np.random.default_rng([seed, class_index, sample_index])


def severity(spec: DistortionSpec, config: SynthConfig) -> float:
    """
    Weighted sum of distortion magnitudes, each normalized to [0, 1] by its range.

    Exposure counts the log-gain distance from 1, dilation the distance from the
    nominal ratio. iris_scale is a nuisance and does not count.
    """
    def ratio(value: float, limit: float) -> float:
        return float(np.clip(value / limit, 0.0, 1.0)) if limit > 0 else 0.0

    log_low, log_high = np.log(config.exposure_range)
    dil_low, dil_high = config.dilation_range
    magnitudes = {
        "blur": ratio(spec.blur_sigma, config.blur_sigma_range[1]),
        "occlusion": ratio(spec.occlusion_fraction, config.occlusion_range[1]),
        "exposure": ratio(abs(np.log(spec.exposure_gain)), max(abs(log_low), abs(log_high))),
        "dilation": ratio(
            abs(spec.dilation_target - config.nominal_dilation),
            max(config.nominal_dilation - dil_low, dil_high - config.nominal_dilation),
        ),
        "off_center": ratio(spec.off_center_px, config.off_center_range[1]),
    }
    return float(sum(config.severity_weights[name] * magnitudes[name] for name in magnitudes))


def sample_distortion(config: SynthConfig, rng: np.random.Generator) -> DistortionSpec:
    """Draw a distortion spec; each distortion is active with distortion_probability."""
    # Fixed number of draws so the stream layout never depends on the outcome
    active = rng.random(5) < config.distortion_probability
    u = rng.random(6)

    def span(bounds, t):
        return bounds[0] + t * (bounds[1] - bounds[0])

    log_gain = span(np.log(config.exposure_range), u[2])
    return DistortionSpec(
        blur_sigma=float(span(config.blur_sigma_range, u[0])) if active[0] else 0.0,
        occlusion_fraction=float(span(config.occlusion_range, u[1])) if active[1] else 0.0,
        exposure_gain=float(np.exp(log_gain)) if active[2] else 1.0,
        dilation_target=float(span(config.dilation_range, u[3])) if active[3] else config.nominal_dilation,
        off_center_px=float(span(config.off_center_range, u[4])) if active[4] else 0.0,
        iris_scale=float(span(config.iris_scale_range, u[5])),
    ).validate()


def gen_class(config: SynthConfig, class_index: int) -> ClassPrototype:
    """Prototype of one class; a pure function of (config, class_index)."""
    return SyntheticIrisGenerator(config).prototype(class_index)


def _draw_prototype(config: SynthConfig, class_index: int,
                    previous: List[ClassPrototype]) -> ClassPrototype:
    rng = np.random.default_rng([config.seed, class_index])
    levels = rng.uniform([85.0, 15.0, 180.0, 140.0], [125.0, 30.0, 205.0, 160.0])
    texture = np.column_stack([
        rng.uniform(4.0, 12.0, TEXTURE_COMPONENTS),
        rng.integers(3, 25, TEXTURE_COMPONENTS).astype(np.float64),
        rng.uniform(0.0, 2 * np.pi, TEXTURE_COMPONENTS),
        rng.uniform(0.5, 4.0, TEXTURE_COMPONENTS),
        rng.uniform(0.0, 2 * np.pi, TEXTURE_COMPONENTS),
    ])

    for _ in range(config.max_retries):
        embedding = Embedding(rng.standard_normal(config.embedding_dim))
        if all(embedding.dot(p.embedding) < config.separation_threshold for p in previous):
            break
    else:
        raise ConfigError(
            f"Class {class_index}: no embedding below cosine {config.separation_threshold} "
            f"after {config.max_retries} retries"
        )

    return ClassPrototype(
        class_index=class_index,
        class_id=class_name(class_index),
        embedding=embedding,
        iris_level=float(levels[0]),
        pupil_level=float(levels[1]),
        sclera_level=float(levels[2]),
        eyelid_level=float(levels[3]),
        texture=texture,
    )


def sample_geometry(spec: DistortionSpec, config: SynthConfig, rng: np.random.Generator) -> IrisGeometry:
    """Pupil at the image center, iris center shifted by off_center_px in a random direction."""
    width, height = config.image_size
    iris_radius = config.iris_radius_fraction * min(width, height) * spec.iris_scale
    pupil_radius = spec.dilation_target * iris_radius
    angle = rng.uniform(0.0, 2 * np.pi)
    center = (width / 2.0, height / 2.0)
    iris_center = (
        center[0] + spec.off_center_px * np.cos(angle),
        center[1] + spec.off_center_px * np.sin(angle),
    )
    if spec.off_center_px + pupil_radius >= iris_radius:
        raise GeometryError(
            f"Pupil (r={pupil_radius:.2f}) offset by {spec.off_center_px:.2f} leaves the iris (r={iris_radius:.2f})"
        )
    return IrisGeometry(center, pupil_radius, iris_center, iris_radius).check_within(width, height)


def _occlusion_cut(annulus: np.ndarray, fraction: float) -> float:
    """Row-center height above which the eyelid covers about `fraction` of the annulus."""
    rows = np.sort(np.nonzero(annulus)[0] + 0.5)
    n_occluded = int(round(fraction * rows.size))
    if n_occluded <= 0:
        return -np.inf
    if n_occluded >= rows.size:
        return np.inf
    return float(rows[n_occluded])


def render_sample(prototype: ClassPrototype, spec: DistortionSpec, geometry: IrisGeometry,
                  width: int, height: int) -> Tuple[GrayImage, OcclusionMask]:
    """Draw the eye, occlude the top band, blur, expose and quantize."""
    ys, xs = np.mgrid[0:height, 0:width] + 0.5
    canvas = prototype.sclera_level + 12.0 * (ys / height - 0.5)

    dx = xs - geometry.iris_center[0]
    dy = ys - geometry.iris_center[1]
    radius = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    rho = np.clip((radius - geometry.pupil_radius) / (geometry.iris_radius - geometry.pupil_radius), 0.0, 1.0)
    texture = np.full_like(canvas, prototype.iris_level)
    for amplitude, angular, phase, radial, radial_phase in prototype.texture:
        texture += amplitude * np.sin(angular * theta + phase) * np.cos(np.pi * radial * rho + radial_phase)
    iris_disc = radius < geometry.iris_radius
    canvas[iris_disc] = texture[iris_disc]

    pupil = geometry.pupil_disc(width, height)
    canvas[pupil] = prototype.pupil_level

    annulus = geometry.annulus(width, height)
    eyelid = ys < _occlusion_cut(annulus, spec.occlusion_fraction)
    canvas[eyelid] = prototype.eyelid_level + 5.0 * np.sin(xs[eyelid] / 4.0)

    if spec.blur_sigma > 0:
        canvas = ndimage.gaussian_filter(canvas, sigma=spec.blur_sigma, mode="nearest")
    canvas = np.clip(np.round(canvas * spec.exposure_gain), 0, 255).astype(np.uint8)

    mask = OcclusionMask(annulus & ~pupil & ~eyelid)
    return GrayImage(canvas), mask


def gen_sample(prototype: ClassPrototype, spec: DistortionSpec, rng: np.random.Generator,
               config: SynthConfig, sample_id: Optional[str] = None,
               is_enrollment: bool = False) -> SyntheticSample:
    """
    Render one sample and derive its embedding.

    The embedding is normalize(class_embedding + kappa * severity * g) with g a
    Gaussian direction drawn first from rng and projected orthogonal to the class
    embedding, so the genuine cosine is 1 / sqrt(1 + (kappa * severity) ** 2).
    A zero-severity spec returns the class embedding unchanged.
    """
    spec.validate()
    base = prototype.embedding.values
    direction = rng.standard_normal(config.embedding_dim)
    direction -= direction.dot(base) * base
    direction /= np.linalg.norm(direction)

    geometry = sample_geometry(spec, config, rng)
    width, height = config.image_size
    image, mask = render_sample(prototype, spec, geometry, width, height)

    level = severity(spec, config)
    if level == 0.0:
        embedding = prototype.embedding
    else:
        embedding = Embedding(prototype.embedding.values + config.severity_to_embedding_noise * level * direction)

    sample_id = sample_id or f"{prototype.class_id}_sample"
    record = SampleRecord(
        sample_id=sample_id,
        class_id=prototype.class_id,
        image_path=f"images/{sample_id}.pgm",
        geometry=geometry,
        occlusion_path=f"masks/{sample_id}_mask.pgm",
        embedding=embedding,
        is_enrollment=is_enrollment,
        severity=level,
        is_ideal=level <= config.ideal_severity,
    )
    return SyntheticSample(record=record, image=image, mask=mask)


class SyntheticIrisGenerator:
    """Generates a full synthetic dataset from a SynthConfig."""

    def __init__(self, config: SynthConfig):
        self.config = config.validate()
        self._prototypes: List[ClassPrototype] = []

    def prototype(self, class_index: int) -> ClassPrototype:
        if not 0 <= class_index < self.config.n_classes:
            raise ConfigError(f"class index {class_index} outside [0, {self.config.n_classes})")
        # Separation is enforced against all lower class indices, so build in order
        while len(self._prototypes) <= class_index:
            self._prototypes.append(_draw_prototype(self.config, len(self._prototypes), self._prototypes))
        return self._prototypes[class_index]

    def sample(self, class_index: int, sample_index: int) -> SyntheticSample:
        """Sample 0 of each class is the distortion-free enrollment."""
        prototype = self.prototype(class_index)
        rng = sample_stream(self.config.seed, class_index, sample_index)
        if sample_index == 0:
            spec = self.config.zero_distortion()
        else:
            spec = sample_distortion(self.config, rng)
        return gen_sample(
            prototype, spec, rng, self.config,
            sample_id=sample_name(class_index, sample_index),
            is_enrollment=sample_index == 0,
        )

    def samples(self, threads: int = 1, progress: bool = False) -> List[SyntheticSample]:
        """All samples in (class, sample) order."""
        for class_index in range(self.config.n_classes):
            self.prototype(class_index)
        keys = [
            (c, s)
            for c in range(self.config.n_classes)
            for s in range(self.config.samples_per_class)
        ]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(lambda key: self.sample(*key), keys))
        return [self.sample(c, s) for c, s in tqdm(keys, desc="synth", disable=not progress)]


def gen_dataset(config: SynthConfig, out_dir: PathLike, threads: int = 1,
                progress: bool = False) -> Tuple[List[SampleRecord], Path]:
    """
    Write images, masks, the manifest and the resolved config under out_dir.

    Returns:
        (records, manifest path)
    """
    out_dir = Path(out_dir)
    generator = SyntheticIrisGenerator(config)
    samples = generator.samples(threads=threads, progress=progress)
    for sample in samples:
        write_image(sample.image, out_dir / sample.record.image_path)
        write_mask(sample.mask, out_dir / sample.record.occlusion_path)

    records = [sample.record for sample in samples]
    manifest_path = save_manifest(records, out_dir / MANIFEST_NAME)
    atomic_write_text(out_dir / CONFIG_NAME, json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    log_dataset_event(logger, "wrote synthetic dataset", manifest_path, len(records))
    return records, manifest_path
