"""
Quality Network

Small encoder-decoder that predicts a coarse iris heatmap at 1/4 input resolution
and regresses a DFS quality score from heatmap-weighted pooled features.

The encoder sees the image together with two normalized coordinate planes, and
its output is reweighted per channel by a gate computed from the global average
of the feature map. Pooling over the predicted iris region therefore still
carries where that region sits and what the whole image looks like.
"""

import logging
from dataclasses import dataclass, field, asdict
from typing import Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
from scipy.special import expit

from config.config import DOWNSAMPLE_FACTOR
from ..core_model.errors import ConfigError, DimensionMismatchError, ValidationError
from ..core_model.types import FeatureMap, GrayImage, IrisGeometry, OcclusionMask, RealGrid, SampleRecord

logger = logging.getLogger(__name__)

ACTIVATIONS = {"elu": nn.ELU, "tanh": nn.Tanh, "relu": nn.ReLU}
COORDINATE_CHANNELS = 2

# Closest doubles to 0 and 1 inside the open unit interval
OPEN_LOW = float(np.nextafter(0.0, 1.0))
OPEN_HIGH = float(np.nextafter(1.0, 0.0))


@dataclass
class ModelConfig:
    """Layer widths of the three encoder stages and their activation."""
    channels: Tuple[int, int, int] = (8, 16, 32)
    activation: str = "elu"

    def validate(self) -> "ModelConfig":
        if len(self.channels) != 3 or any(int(c) < 1 or int(c) > 64 for c in self.channels):
            raise ConfigError(f"channels must be three widths in [1, 64], got {self.channels}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}")
        self.channels = tuple(int(c) for c in self.channels)
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["channels"] = list(self.channels)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelConfig":
        unknown = set(data) - {"channels", "activation"}
        if unknown:
            raise ConfigError(f"Unknown model config keys: {sorted(unknown)}")
        config = cls(**data)
        config.channels = tuple(config.channels)
        return config.validate()


@dataclass(frozen=True, eq=False)
class Prediction:
    """Predicted quality in (0, 1) and the heatmap at 1/4 resolution."""
    quality: float
    heatmap: RealGrid
    quality_logit: float
    record: Optional[SampleRecord] = None


@dataclass
class NetOutput:
    """Batched tensors of one forward pass; they keep the autograd graph."""
    features: torch.Tensor
    heatmap: torch.Tensor
    pooled: torch.Tensor
    quality_logit: torch.Tensor
    quality: torch.Tensor

    def prediction(self, index: int = 0) -> Prediction:
        """
        Detached prediction of one batch item.

        Quality is recomputed from the logit in float64 and both quality and
        heatmap are kept strictly inside (0, 1), where a float32 sigmoid rounds
        large logits to exactly 0 or 1.
        """
        logit = float(self.quality_logit[index].detach())
        heatmap = self.heatmap[index, 0].detach().double().numpy()
        return Prediction(
            quality=float(np.clip(expit(logit), OPEN_LOW, OPEN_HIGH)),
            heatmap=RealGrid(np.clip(heatmap, OPEN_LOW, OPEN_HIGH)),
            quality_logit=logit,
        )


def attention_pool(features: torch.Tensor, heatmap: torch.Tensor) -> torch.Tensor:
    """
    Heatmap-weighted spatial average of a feature map, per channel.

    Args:
        features: (batch, channels, height, width)
        heatmap: (batch, 1, height, width) non-negative weights

    Returns:
        (batch, channels) quality vectors
    """
    if (
        features.dim() != 4
        or heatmap.dim() != 4
        or heatmap.shape[1] != 1
        or features.shape[0] != heatmap.shape[0]
        or features.shape[-2:] != heatmap.shape[-2:]
    ):
        raise DimensionMismatchError(
            f"Feature map {tuple(features.shape)} and heatmap {tuple(heatmap.shape)} are incompatible"
        )
    weight_sum = heatmap.sum(dim=(2, 3))
    if bool((weight_sum <= 0).any()):
        raise ValidationError("Heatmap weights must have a strictly positive sum")
    return (features * heatmap).sum(dim=(2, 3)) / weight_sum


def attention_pool_map(features: FeatureMap, heatmap: RealGrid) -> np.ndarray:
    """attention_pool on domain types: returns a vector of length features.channels."""
    if (features.width, features.height) != (heatmap.width, heatmap.height):
        raise DimensionMismatchError(
            f"Feature map {features.width}x{features.height} vs heatmap {heatmap.width}x{heatmap.height}"
        )
    f = torch.from_numpy(np.array(features.values)).permute(2, 0, 1).unsqueeze(0)
    h = torch.from_numpy(np.array(heatmap.values)).unsqueeze(0).unsqueeze(0)
    return attention_pool(f, h)[0].numpy()


def with_coordinates(images: torch.Tensor) -> torch.Tensor:
    """Append row and column coordinate planes in [-1, 1] to a (N, 1, H, W) batch."""
    batch, _, height, width = images.shape
    rows = torch.linspace(-1.0, 1.0, height, dtype=images.dtype)
    cols = torch.linspace(-1.0, 1.0, width, dtype=images.dtype)
    grid = torch.stack(torch.meshgrid(rows, cols, indexing="ij"))
    return torch.cat([images, grid.expand(batch, COORDINATE_CHANNELS, height, width)], dim=1)


class IrisQualityNet(nn.Module):
    """
    Three-stage convolutional encoder with a global context gate, 1x1 heatmap
    head and linear quality head.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        c1, c2, c3 = config.channels
        act = ACTIVATIONS[config.activation]
        self.encoder = nn.Sequential(
            nn.Conv2d(1 + COORDINATE_CHANNELS, c1, kernel_size=3, stride=1, padding=1),
            act(),
            nn.Conv2d(c1, c2, kernel_size=3, stride=2, padding=1),
            act(),
            nn.Conv2d(c2, c3, kernel_size=3, stride=2, padding=1),
            act(),
        )
        self.context = nn.Sequential(
            nn.AdaptiveAvgPool2d((1, 1)),
            nn.Conv2d(c3, c3, kernel_size=1),
            nn.Sigmoid(),
        )
        self.heatmap_head = nn.Conv2d(c3, 1, kernel_size=1)
        self.regressor = nn.Linear(c3, 1)

    def forward(self, images: torch.Tensor) -> NetOutput:
        encoded = self.encoder(with_coordinates(images))
        features = encoded * self.context(encoded)
        heatmap = torch.sigmoid(self.heatmap_head(features))
        pooled = attention_pool(features, heatmap)
        logit = self.regressor(pooled).squeeze(1)
        return NetOutput(features, heatmap, pooled, logit, torch.sigmoid(logit))

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _init_weights(module: nn.Module):
    # Glorot uniform: a = sqrt(6 / (fan_in + fan_out))
    if isinstance(module, (nn.Conv2d, nn.Linear)):
        nn.init.xavier_uniform_(module.weight)
        nn.init.zeros_(module.bias)


def build_model(config: ModelConfig, seed: int) -> IrisQualityNet:
    """Build a network with seeded weights without touching the global RNG."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = IrisQualityNet(config)
        model.apply(_init_weights)
    logger.debug(f"Built quality network with {model.parameter_count()} parameters (seed {seed})")
    return model


def check_input_size(width: int, height: int, factor: int = DOWNSAMPLE_FACTOR):
    if width % factor or height % factor:
        raise DimensionMismatchError(f"Image size {width}x{height} is not divisible by {factor}")


def image_tensor(image: GrayImage, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(1, 1, H, W) tensor of intensities scaled to [0, 1]."""
    check_input_size(image.width, image.height)
    return torch.from_numpy(image.as_float() / 255.0).to(dtype).unsqueeze(0).unsqueeze(0)


def _model_dtype(model: nn.Module) -> torch.dtype:
    return next(model.parameters()).dtype


def forward(model: IrisQualityNet, image: GrayImage) -> NetOutput:
    """Forward pass on one image, keeping activations for backpropagation."""
    return model(image_tensor(image, _model_dtype(model)))


def predict(model: IrisQualityNet, image: GrayImage, record: Optional[SampleRecord] = None) -> Prediction:
    """
    Inference without gradient tracking.

    When a record is given, the returned prediction carries a copy of it with
    predicted_quality filled in.
    """
    model.eval()
    with torch.no_grad():
        prediction = forward(model, image).prediction(0)
    if record is not None:
        prediction = Prediction(
            quality=prediction.quality,
            heatmap=prediction.heatmap,
            quality_logit=prediction.quality_logit,
            record=record.with_updates(predicted_quality=prediction.quality),
        )
    return prediction


def heatmap_target(mask: OcclusionMask, geometry: IrisGeometry, factor: int = DOWNSAMPLE_FACTOR) -> RealGrid:
    """
    Binary supervision grid at 1/factor resolution.

    Usable iris pixels (annulus and mask) are pooled over factor x factor blocks;
    a cell is 1 when strictly more than half of its block is usable.
    """
    check_input_size(mask.width, mask.height, factor)
    region = mask.bits & geometry.annulus(mask.width, mask.height)
    blocks = region.reshape(mask.height // factor, factor, mask.width // factor, factor)
    return RealGrid((blocks.mean(axis=(1, 3)) > 0.5).astype(np.float64))
