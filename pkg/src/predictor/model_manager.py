"""
Model Manager for the Quality Predictor

Handles checkpoint persistence: config, weights and training metadata in one
versioned file that reloads bit-exactly.
"""

import io
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import torch

from config.logging_config import log_dataset_event
from ..core_model.errors import ValidationError
from ..utils.atomic_io import atomic_write_bytes
from .network import IrisQualityNet, ModelConfig
from .training import TrainConfig, TrainingResult

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
CHECKPOINT_SUFFIX = ".pt"

PathLike = Union[str, Path]


class ModelManager:
    """Manages quality-network checkpoints in a models directory."""

    def __init__(self, models_dir: PathLike = "models"):
        self.models_dir = Path(models_dir)

    def save_checkpoint(self, result: TrainingResult, path: Optional[PathLike] = None,
                        metadata: Optional[Dict[str, Any]] = None) -> Path:
        """
        Save a trained model with its train config and metadata.

        Metadata holds no wall-clock time so identical runs give identical files.
        """
        path = Path(path) if path is not None else self.models_dir / f"quality_seed{result.config.seed}{CHECKPOINT_SUFFIX}"
        final = result.history[-1] if result.history else None
        payload = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "model_config": result.model.config.to_dict(),
            "train_config": result.config.to_dict(),
            "state_dict": {k: v.detach().clone() for k, v in result.model.state_dict().items()},
            "metadata": {
                "epochs": len(result.history),
                "final_loss": float(final.loss) if final else None,
                "parameters": int(result.model.parameter_count()),
                **(metadata or {}),
            },
        }
        buffer = io.BytesIO()
        torch.save(payload, buffer)
        atomic_write_bytes(path, buffer.getvalue())
        log_dataset_event(logger, "saved checkpoint", path, payload["metadata"]["parameters"])
        return path

    def load_checkpoint(self, path: PathLike) -> Tuple[IrisQualityNet, TrainConfig, Dict[str, Any]]:
        """Load a checkpoint; returns the model in eval mode, its train config and metadata."""
        path = Path(path)
        payload = torch.load(path, map_location="cpu", weights_only=True)
        if not isinstance(payload, dict) or payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint format")
        model = IrisQualityNet(ModelConfig.from_dict(payload["model_config"]))
        model.load_state_dict(payload["state_dict"])
        model.eval()
        train_config = TrainConfig.from_dict(payload["train_config"])
        log_dataset_event(logger, "loaded checkpoint", path, model.parameter_count())
        return model, train_config, dict(payload["metadata"])

    def list_checkpoints(self) -> List[Path]:
        """Checkpoint files in the models directory, sorted by name."""
        if not self.models_dir.exists():
            return []
        return sorted(self.models_dir.glob(f"*{CHECKPOINT_SUFFIX}"))
