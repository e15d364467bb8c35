#!/usr/bin/env python3
"""
Full Pipeline Script

Generates a synthetic dataset, splits it by class, labels it, computes the
quality factors, trains the predictor and writes the report, one CLI step at a
time. Every artifact lands under the chosen work directory.

    python scripts/run_pipeline.py --work-dir runs/seed7 --seed 7
"""

import argparse
import logging
import sys
from pathlib import Path

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.cli import run

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger("pipeline")


def pipeline_steps(work_dir: Path, seed: int, epochs: int = None):
    """CLI argument lists of every pipeline step, in order."""
    data = work_dir / "data"
    seed_args = ["--seed", str(seed)]
    train = ["train", "--manifest", data / "factors.jsonl", "--out-checkpoint", work_dir / "models" / "quality.pt"]
    if epochs is not None:
        train += ["--epochs", str(epochs)]
    steps = [
        ["synth", "--out", data, *seed_args],
        ["split", "--manifest", data / "manifest.jsonl", "--out", data / "split.jsonl", *seed_args],
        ["label", "--manifest", data / "split.jsonl", "--out", data / "labeled.jsonl"],
        ["factors", "--manifest", data / "labeled.jsonl", "--out", work_dir / "factors.csv",
         "--write-manifest", data / "factors.jsonl"],
        train + seed_args,
        ["predict", "--manifest", data / "factors.jsonl", "--checkpoint", work_dir / "models" / "quality.pt",
         "--out", data / "predicted.jsonl"],
        ["report", "--manifest", data / "predicted.jsonl", "--out", work_dir / "report"],
    ]
    return [[str(arg) for arg in step] for step in steps]


def run_pipeline(work_dir: Path, seed: int, epochs: int = None) -> bool:
    """Run every step; stop at the first failing one."""
    for argv in pipeline_steps(work_dir, seed, epochs):
        logger.info(f"Running: irisq {' '.join(argv)}")
        code = run(argv)
        if code != 0:
            logger.error(f"Step {argv[0]} failed with exit code {code}")
            return False
    logger.info(f"Pipeline finished; report in {work_dir / 'report'}")
    return True


def main():
    parser = argparse.ArgumentParser(description="Run the full synthetic quality pipeline")
    parser.add_argument("--work-dir", default="runs/default", help="Directory for all artifacts")
    parser.add_argument("--seed", type=int, default=7, help="Seed for generation, split and training")
    parser.add_argument("--epochs", type=int, default=None, help="Training epochs override")
    args = parser.parse_args()
    success = run_pipeline(Path(args.work_dir), args.seed, args.epochs)
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
