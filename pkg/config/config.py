"""
Configuration Management

This module handles application-wide settings: paths, logging, threading and the
domain defaults shared by the synthetic generator, the predictor and the evaluation
harness.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
MODELS_DIR = BASE_DIR / "models"
LOGS_DIR = BASE_DIR / "logs"

# Output directory override for CLI subcommands (relative --out paths resolve here)
OUTPUT_DIR = Path(os.getenv("IRISQ_OUTPUT_DIR", "")) if os.getenv("IRISQ_OUTPUT_DIR") else None

# Application settings
APP_NAME = "Iris Quality Toolkit"
APP_VERSION = "0.1.0"
DEBUG_MODE = os.getenv("DEBUG_MODE", "False").lower() == "true"

# Parallelism (1 keeps training and generation bit-deterministic)
DEFAULT_THREADS = int(os.getenv("IRISQ_THREADS", "1"))

# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
MAX_LOG_SIZE_MB = 10
LOG_BACKUP_COUNT = 5

# Image settings
MIN_IMAGE_SIDE = 8
PGM_MAXVAL = 255
DOWNSAMPLE_FACTOR = 4
DEFAULT_IMAGE_SIZE = (128, 96)  # (width, height)

# Manifest settings
MANIFEST_SCHEMA_VERSION = 1
EMBEDDING_NORM_TOLERANCE = 1e-6
EMBEDDING_RENORMALIZE_RANGE = (0.5, 2.0)

# Synthetic data settings
DEFAULT_SEED = 7
SEVERITY_WEIGHTS = {
    "blur": 0.35,
    "occlusion": 0.30,
    "exposure": 0.15,
    "dilation": 0.10,
    "off_center": 0.10,
}

# Evaluation settings
EER_IRR_GRID = (0.0, 0.25, 0.5, 0.75, 0.95)
DEFAULT_CURVE_STEPS = 20
FACTOR_NAMES = ("sharpness", "iris_size", "dilation", "gray_level_spread", "usable_area")


def ensure_directories():
    """Create the data, model and log directories on demand."""
    for directory in (DATA_DIR, MODELS_DIR, LOGS_DIR):
        directory.mkdir(parents=True, exist_ok=True)


def resolve_output_path(path) -> Path:
    """Resolve a CLI output path against IRISQ_OUTPUT_DIR when it is relative."""
    path = Path(path)
    if OUTPUT_DIR is not None and not path.is_absolute():
        return OUTPUT_DIR / path
    return path
