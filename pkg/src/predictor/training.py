"""
Predictor Training

Composite heatmap/DFS loss, the lambda and learning-rate schedules, the Adam step
and the seeded training loop.
"""

import copy
import math
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from tqdm import tqdm

from config.config import DOWNSAMPLE_FACTOR
from config.logging_config import log_performance_metric
from ..core_model.errors import ConfigError, DimensionMismatchError, NumericError, ValidationError
from ..core_model.image_io import read_image, read_mask
from ..core_model.manifest import resolve_path
from ..core_model.types import RealGrid, SampleRecord
from .network import IrisQualityNet, ModelConfig, Prediction, build_model, heatmap_target, image_tensor

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Optimization settings; defaults follow the published training recipe."""
    lambda0: float = 0.8
    lambda_halving_period: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_epsilon: float = 1e-8
    lr0: float = 4e-4
    lr_halvings: int = 4
    epochs: int = 200
    batch_size: int = 8
    seed: int = 0
    threads: int = 1
    model: ModelConfig = field(default_factory=ModelConfig)

    def validate(self) -> "TrainConfig":
        if not 0.0 < self.lambda0 < 1.0:
            raise ConfigError(f"lambda0 must lie in (0, 1), got {self.lambda0}")
        if not self.lr0 > 0.0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if not self.adam_epsilon > 0.0:
            raise ConfigError("adam_epsilon must be positive")
        for name in ("lambda_halving_period", "epochs", "batch_size", "threads"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.lr_halvings < 0:
            raise ConfigError("lr_halvings must be non-negative")
        self.model.validate()
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["model"] = self.model.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown train config keys: {sorted(unknown)}")
        model = ModelConfig.from_dict(data.pop("model", {}))
        return cls(model=model, **data).validate()


@dataclass
class LossTerms:
    total: torch.Tensor
    mask_loss: torch.Tensor
    dfs_loss: torch.Tensor


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    lam: float
    lr: float
    loss: float
    mask_loss: float
    dfs_loss: float


@dataclass
class TrainingSet:
    """Stacked tensors: images (N,1,H,W), dfs targets (N,), mask targets (N,1,H/4,W/4)."""
    images: torch.Tensor
    dfs_targets: torch.Tensor
    mask_targets: torch.Tensor
    sample_ids: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.images.shape[0])


@dataclass
class TrainingResult:
    model: IrisQualityNet
    history: List[EpochLog]
    config: TrainConfig


def anneal_lambda(epoch: int, config: TrainConfig) -> float:
    """lambda0 halved every lambda_halving_period epochs."""
    if epoch < 0:
        raise ConfigError(f"epoch must be non-negative, got {epoch}")
    return config.lambda0 / 2 ** (epoch // config.lambda_halving_period)


def lr_schedule(epoch: int, config: TrainConfig) -> float:
    """lr0 halved lr_halvings times at evenly spaced epoch boundaries."""
    if epoch < 0:
        raise ConfigError(f"epoch must be non-negative, got {epoch}")
    k = min(config.lr_halvings, (epoch * (config.lr_halvings + 1)) // config.epochs)
    return config.lr0 / 2 ** k


def composite_loss(quality: torch.Tensor, heatmap: torch.Tensor, dfs_target: torch.Tensor,
                   mask_target: torch.Tensor, lam: float) -> LossTerms:
    """
    lam * BCE(heatmap, mask) + (1 - lam) * MSE(quality, dfs), both batch means.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must lie in [0, 1], got {lam}")
    if heatmap.shape != mask_target.shape:
        raise DimensionMismatchError(
            f"Heatmap {tuple(heatmap.shape)} does not match mask target {tuple(mask_target.shape)}"
        )
    if quality.shape != dfs_target.shape:
        raise DimensionMismatchError(
            f"Quality {tuple(quality.shape)} does not match DFS target {tuple(dfs_target.shape)}"
        )
    mask_loss = F.binary_cross_entropy(heatmap, mask_target)
    dfs_loss = torch.mean((quality - dfs_target) ** 2)
    return LossTerms(lam * mask_loss + (1.0 - lam) * dfs_loss, mask_loss, dfs_loss)


def prediction_loss(pred: Prediction, dfs_target: float, mask_target: RealGrid, lam: float) -> float:
    """Composite loss of a single detached prediction."""
    terms = composite_loss(
        torch.tensor([pred.quality], dtype=torch.float64),
        torch.from_numpy(np.array(pred.heatmap.values)).unsqueeze(0).unsqueeze(0),
        torch.tensor([float(dfs_target)], dtype=torch.float64),
        torch.from_numpy(np.array(mask_target.values)).unsqueeze(0).unsqueeze(0),
        lam,
    )
    return float(terms.total)


def loss_and_gradients(model: IrisQualityNet, images: torch.Tensor, dfs_targets: torch.Tensor,
                       mask_targets: torch.Tensor, lam: float) -> Tuple[float, Dict[str, torch.Tensor]]:
    """Composite loss of a batch and its gradient for every named parameter."""
    model.zero_grad()
    output = model(images)
    terms = composite_loss(output.quality, output.heatmap, dfs_targets, mask_targets, lam)
    terms.total.backward()
    gradients = {name: p.grad.detach().clone() for name, p in model.named_parameters()}
    return float(terms.total.detach()), gradients


def build_optimizer(model: IrisQualityNet, config: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        model.parameters(),
        lr=config.lr0,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_epsilon,
    )


def adam_step(model: IrisQualityNet, optimizer: torch.optim.Optimizer, lr: float):
    """
    One bias-corrected Adam update at the given learning rate.

    Raises:
        NumericError: some gradient holds NaN or infinity
    """
    bad = [
        f"{name} ({int((~torch.isfinite(p.grad)).sum())} non-finite)"
        for name, p in model.named_parameters()
        if p.grad is not None and not bool(torch.isfinite(p.grad).all())
    ]
    if bad:
        raise NumericError(f"Non-finite gradients, aborting training: {', '.join(bad)}")
    for group in optimizer.param_groups:
        group["lr"] = lr
    optimizer.step()


def prepare_training_set(records: Sequence[SampleRecord], base_dir: Union[str, Path] = ".",
                         factor: int = DOWNSAMPLE_FACTOR) -> TrainingSet:
    """Load images and build DFS and heatmap targets for labeled records."""
    records = list(records)
    if not records:
        raise ValidationError("Training set is empty")
    images, masks, targets = [], [], []
    shape = None
    for record in records:
        if record.dfs_label is None:
            raise ValidationError(f"{record.sample_id}: missing dfs_label, run labeling first")
        image = read_image(resolve_path(base_dir, record.image_path))
        mask = read_mask(resolve_path(base_dir, record.occlusion_path))
        if shape is None:
            shape = (image.width, image.height)
        if (image.width, image.height) != shape or (mask.width, mask.height) != shape:
            raise DimensionMismatchError(
                f"{record.sample_id}: image/mask size differs from the first sample {shape}"
            )
        images.append(image_tensor(image)[0])
        masks.append(torch.from_numpy(heatmap_target(mask, record.geometry, factor).values).float().unsqueeze(0))
        targets.append(record.dfs_label)
    return TrainingSet(
        images=torch.stack(images),
        dfs_targets=torch.tensor(targets, dtype=torch.float32),
        mask_targets=torch.stack(masks),
        sample_ids=[r.sample_id for r in records],
    )


def train(training_set: TrainingSet, config: TrainConfig, progress: bool = False) -> TrainingResult:
    """
    Train the quality network with seeded init and seeded per-epoch shuffling.

    Bit-deterministic for a fixed seed when config.threads == 1.
    """
    config.validate()
    n = len(training_set)
    if n == 0:
        raise ValidationError("Training set is empty")
    height, width = training_set.images.shape[-2:]
    if tuple(training_set.mask_targets.shape[-2:]) != (height // DOWNSAMPLE_FACTOR, width // DOWNSAMPLE_FACTOR):
        raise DimensionMismatchError(
            f"Mask targets {tuple(training_set.mask_targets.shape)} are not 1/{DOWNSAMPLE_FACTOR} "
            f"of images {tuple(training_set.images.shape)}"
        )

    torch.set_num_threads(config.threads)
    model = build_model(config.model, config.seed)
    optimizer = build_optimizer(model, config)
    rng = np.random.default_rng(config.seed)
    logger.info(
        f"Training on {n} samples for {config.epochs} epochs "
        f"({model.parameter_count()} parameters, batch {config.batch_size})"
    )

    history: List[EpochLog] = []
    epochs = tqdm(range(config.epochs), desc="train", disable=not progress)
    for epoch in epochs:
        lam = anneal_lambda(epoch, config)
        lr = lr_schedule(epoch, config)
        order = rng.permutation(n)
        sums = np.zeros(3)
        model.train()
        for start in range(0, n, config.batch_size):
            batch = torch.from_numpy(order[start:start + config.batch_size])
            output = model(training_set.images[batch])
            terms = composite_loss(
                output.quality,
                output.heatmap,
                training_set.dfs_targets[batch],
                training_set.mask_targets[batch],
                lam,
            )
            optimizer.zero_grad()
            terms.total.backward()
            adam_step(model, optimizer, lr)
            sums += len(batch) * np.array([
                float(terms.total.detach()),
                float(terms.mask_loss.detach()),
                float(terms.dfs_loss.detach()),
            ])

        loss, mask_loss, dfs_loss = (float(value) for value in sums / n)
        if not math.isfinite(loss):
            raise NumericError(f"Epoch {epoch}: loss is not finite ({loss})")
        history.append(EpochLog(epoch, lam, lr, loss, mask_loss, dfs_loss))
        if epoch % 10 == 0 or epoch == config.epochs - 1:
            log_performance_metric(logger, "train_loss", loss, f"epoch {epoch}, lambda {lam}, lr {lr:g}")

    model.eval()
    return TrainingResult(model=model, history=history, config=config)


def history_frame(history: Sequence[EpochLog]) -> pd.DataFrame:
    """Per-epoch loss log as a table."""
    return pd.DataFrame(
        [asdict(entry) for entry in history],
        columns=["epoch", "lam", "lr", "loss", "mask_loss", "dfs_loss"],
    ).rename(columns={"lam": "lambda"})


def gradient_check(model: IrisQualityNet, images: torch.Tensor, dfs_targets: torch.Tensor,
                   mask_targets: torch.Tensor, lam: float, h: float = 1e-5, floor: float = 1e-4) -> float:
    """
    Compare autograd gradients with central finite differences in float64.

    Returns:
        Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor)
    """
    return _gradient_check(copy.deepcopy(model), images, dfs_targets, mask_targets, lam, h, floor)


def _gradient_check(model, images, dfs_targets, mask_targets, lam, h, floor) -> float:
    model = model.double()
    images = images.double()
    dfs_targets = dfs_targets.double()
    mask_targets = mask_targets.double()

    def evaluate() -> torch.Tensor:
        output = model(images)
        return composite_loss(output.quality, output.heatmap, dfs_targets, mask_targets, lam).total

    params = list(model.parameters())
    analytic = torch.autograd.grad(evaluate(), params)

    worst = 0.0
    with torch.no_grad():
        for param, grad in zip(params, analytic):
            flat = param.view(-1)
            flat_grad = grad.reshape(-1)
            for j in range(flat.numel()):
                original = float(flat[j])
                flat[j] = original + h
                loss_plus = float(evaluate())
                flat[j] = original - h
                loss_minus = float(evaluate())
                flat[j] = original
                numeric = (loss_plus - loss_minus) / (2 * h)
                a = float(flat_grad[j])
                worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), floor))
    return worst
