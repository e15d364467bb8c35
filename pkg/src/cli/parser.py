"""
Command-line parser for the quality pipeline.
"""

import argparse

from config.config import APP_NAME, APP_VERSION, DEBUG_MODE, DEFAULT_CURVE_STEPS, DEFAULT_SEED, DEFAULT_THREADS, LOG_LEVEL

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE instead of 2."""

    def error(self, message):
        self.print_usage()
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser, manifest: bool = True):
    if manifest:
        parser.add_argument("--manifest", required=True, help="Input manifest (JSONL)")
    parser.add_argument("--seed", type=int, default=None, help="Random seed override")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--threads", type=int, default=DEFAULT_THREADS,
                        help="Worker threads (1 keeps results bit-deterministic)")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(
        prog="irisq",
        description=f"{APP_NAME}: iris image quality factors, DFS labels, predictor and IRR-EER evaluation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    parser.add_argument("--log-level", default="DEBUG" if DEBUG_MODE else LOG_LEVEL, help="Logging level")
    parser.add_argument("--log-file", default=None, help="Also log to this rotating file")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CliArgumentParser)
    sub.required = True

    p = sub.add_parser("synth", help="Generate a seeded synthetic dataset")
    _common(p, manifest=False)
    p.add_argument("--out", default="synth_data", help="Dataset directory")

    p = sub.add_parser("split", help="Assign whole classes to train/test splits")
    _common(p)
    p.add_argument("--out", required=True, help="Output manifest")
    p.add_argument("--test-fraction", type=float, default=0.3, help="Fraction of classes held out")

    p = sub.add_parser("label", help="Populate dfs_label from embeddings")
    _common(p)
    p.add_argument("--out", required=True, help="Output manifest")

    p = sub.add_parser("factors", help="Compute the hand-crafted quality factors")
    _common(p)
    p.add_argument("--out", required=True, help="Output CSV, one row per sample")
    p.add_argument("--write-manifest", default=None, help="Also write the manifest with factors cached")

    p = sub.add_parser("train", help="Train the quality predictor")
    _common(p)
    p.add_argument("--out-checkpoint", required=True, help="Checkpoint file")
    p.add_argument("--loss-log", default=None, help="Per-epoch loss CSV (default: next to the checkpoint)")
    p.add_argument("--epochs", type=int, default=None, help="Epoch count override")
    p.add_argument("--split", choices=("train", "all"), default="train",
                   help="Records to train on; 'train' falls back to all when no split is set")
    p.add_argument("--progress", action="store_true", help="Show a progress bar")

    p = sub.add_parser("predict", help="Populate predicted_quality with a trained checkpoint")
    _common(p)
    p.add_argument("--checkpoint", required=True, help="Checkpoint file")
    p.add_argument("--out", required=True, help="Output manifest")

    p = sub.add_parser("eval", help="IRR-EER curve for one quality field")
    _common(p)
    p.add_argument("--quality-field", default="dfs_label", help="dfs_label, predicted_quality, severity or a factor")
    p.add_argument("--steps", type=int, default=DEFAULT_CURVE_STEPS, help="Number of IRR targets")
    p.add_argument("--split", choices=("all", "train", "test"), default="all", help="Records to evaluate")
    p.add_argument("--out", required=True, help="Output curve CSV")

    p = sub.add_parser("report", help="Correlation and EER@IRR tables over several quality fields")
    _common(p)
    p.add_argument("--quality-fields", nargs="+", default=None,
                   help="Fields to compare (default: dfs_label, predicted_quality if present, cached factors)")
    p.add_argument("--steps", type=int, default=DEFAULT_CURVE_STEPS, help="Number of IRR targets per curve")
    p.add_argument("--out", default="report", help="Report directory")

    parser.subcommands = sub.choices
    return parser


def resolved_seed(args) -> int:
    return DEFAULT_SEED if args.seed is None else args.seed
