"""
CLI Subcommands

Each cmd_* function takes the parsed arguments, does its work and writes every
artifact atomically. Errors propagate to the dispatcher in src.cli, which maps
them to exit codes.
"""

import json
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch

from config.config import EER_IRR_GRID, FACTOR_NAMES, resolve_output_path
from config.logging_config import get_logger, log_dataset_event, log_function_call, log_performance_metric
from ..core_model.errors import ConfigError, UndefinedCorrelationError, ValidationError
from ..core_model.manifest import load_manifest, rebase_paths, save_manifest
from ..core_model.types import SampleRecord
from ..dfs_metric import build_labels, split_by_class
from ..evaluation import (
    band_curve,
    benchmark_point,
    build_score_pairs,
    correlation_report,
    eer,
    eer_at_irr,
    irr_eer_curve,
    quality_distribution,
    quality_values,
)
from ..factors import FactorEngineer
from ..predictor import ModelManager, TrainConfig, history_frame, predict_records, prepare_training_set, train
from ..synth import SynthConfig, gen_dataset
from ..utils.atomic_io import atomic_write_text
from .parser import resolved_seed

logger = get_logger("cli")

# Fields gated by "keep quality >= q"; every other field uses the band-threshold baseline
THRESHOLD_GATED = ("dfs_label", "predicted_quality")


def read_json_config(path: Optional[str]) -> Dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON config: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def print_resolved(command: str, settings: Dict):
    """Echo the resolved configuration on stdout before any work."""
    print(json.dumps({"command": command, **settings}, indent=2, sort_keys=True, default=str))


def _settings(args) -> Dict:
    return dict(vars(args))


def _load(args) -> Tuple[List[SampleRecord], Path]:
    manifest = Path(args.manifest)
    return load_manifest(manifest), manifest.parent


def _write_records(records: Sequence[SampleRecord], source_dir: Path, out: str) -> Path:
    """Save records to a new manifest, keeping relative image paths valid."""
    out_path = resolve_output_path(out)
    records = rebase_paths(records, source_dir, out_path.parent)
    save_manifest(records, out_path)
    log_dataset_event(logger, "wrote manifest", out_path, len(records))
    return out_path


def _write_frame(frame: pd.DataFrame, path: Path, text: bool = False) -> Path:
    if text:
        content = frame.to_string(index=False, float_format=lambda v: f"{v:.4f}") + "\n"
    else:
        content = frame.to_csv(index=False, lineterminator="\n")
    return atomic_write_text(path, content)


def _select_split(records: Sequence[SampleRecord], split: str) -> List[SampleRecord]:
    if split == "all":
        return list(records)
    chosen = [r for r in records if r.split == split]
    if not chosen:
        raise ValidationError(f"No records in split {split!r}; run the split command first")
    return chosen


@log_function_call(logger, "cmd_synth")
def cmd_synth(args) -> int:
    data = read_json_config(args.config)
    config = SynthConfig.from_dict(data) if data else SynthConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config.validate()
    out_dir = resolve_output_path(args.out)
    print_resolved("synth", {**_settings(args), "synth_config": config.to_dict()})
    records, manifest = gen_dataset(config, out_dir, threads=args.threads)
    logger.info(f"Synthetic dataset: {len(records)} records, manifest {manifest}")
    return 0


@log_function_call(logger, "cmd_split")
def cmd_split(args) -> int:
    print_resolved("split", _settings(args))
    records, source_dir = _load(args)
    split = split_by_class(records, test_fraction=args.test_fraction, seed=resolved_seed(args))
    _write_records(split, source_dir, args.out)
    return 0


@log_function_call(logger, "cmd_label")
def cmd_label(args) -> int:
    print_resolved("label", _settings(args))
    records, source_dir = _load(args)
    dataset = build_labels(records)
    _write_records(dataset.records, source_dir, args.out)
    return 0


@log_function_call(logger, "cmd_factors")
def cmd_factors(args) -> int:
    print_resolved("factors", _settings(args))
    records, source_dir = _load(args)
    engineer = FactorEngineer(base_dir=source_dir, threads=args.threads)
    reports = engineer.compute_reports(records)
    out_path = resolve_output_path(args.out)
    _write_frame(engineer.build_table(records, reports), out_path)
    log_dataset_event(logger, "wrote factor table", out_path, len(records))
    if args.write_manifest:
        _write_records(engineer.annotate(records, reports), source_dir, args.write_manifest)
    return 0


@log_function_call(logger, "cmd_train")
def cmd_train(args) -> int:
    data = read_json_config(args.config)
    config = TrainConfig.from_dict(data) if data else TrainConfig()
    overrides = {"threads": max(1, args.threads)}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    config = replace(config, **overrides).validate()

    checkpoint = resolve_output_path(args.out_checkpoint)
    loss_log = resolve_output_path(args.loss_log) if args.loss_log else checkpoint.with_name(f"{checkpoint.stem}_loss.csv")
    print_resolved("train", {**_settings(args), "train_config": config.to_dict()})

    records, source_dir = _load(args)
    if args.split == "train" and any(r.split is not None for r in records):
        records = _select_split(records, "train")
    training_set = prepare_training_set(records, base_dir=source_dir)
    result = train(training_set, config, progress=args.progress)

    ModelManager(checkpoint.parent).save_checkpoint(result, checkpoint, metadata={"samples": len(training_set)})
    _write_frame(history_frame(result.history), loss_log)
    log_dataset_event(logger, "wrote loss log", loss_log, len(result.history))
    return 0


@log_function_call(logger, "cmd_predict")
def cmd_predict(args) -> int:
    print_resolved("predict", _settings(args))
    torch.set_num_threads(max(1, args.threads))
    model, _, _ = ModelManager().load_checkpoint(args.checkpoint)
    records, source_dir = _load(args)
    predicted = predict_records(model, records, base_dir=source_dir)
    _write_records(predicted, source_dir, args.out)
    return 0


@log_function_call(logger, "cmd_eval")
def cmd_eval(args) -> int:
    print_resolved("eval", _settings(args))
    records, _ = _load(args)
    records = _select_split(records, args.split)
    curve = irr_eer_curve(records, quality_field=args.quality_field, steps=args.steps)
    out_path = resolve_output_path(args.out)
    _write_frame(curve.to_frame(), out_path)
    for note in curve.notes:
        logger.warning(f"{args.quality_field}: {note}")
    log_dataset_event(logger, "wrote IRR-EER curve", out_path, len(curve.points))
    return 0


def default_quality_fields(records: Sequence[SampleRecord]) -> List[str]:
    """dfs_label, predicted_quality when every probe has it, and factors cached on every probe."""
    probes = [r for r in records if not r.is_enrollment]
    fields = ["dfs_label"]
    if probes and all(r.predicted_quality is not None for r in probes):
        fields.append("predicted_quality")
    fields.extend(name for name in FACTOR_NAMES if probes and all(name in r.factors for r in probes))
    return fields


def _report_splits(records: Sequence[SampleRecord]) -> Tuple[List[SampleRecord], List[SampleRecord]]:
    """(training records for band centers and distributions, evaluated records)."""
    if any(r.split is not None for r in records):
        return _select_split(records, "train"), _select_split(records, "test")
    return list(records), list(records)


def _correlation_rows(records, fields) -> pd.DataFrame:
    probes = [r for r in records if not r.is_enrollment]
    rows = []
    for field_name in fields:
        try:
            report = correlation_report(records, field_name)
            rows.append({"quality_field": field_name, **report.as_dict(), "records": len(probes), "note": ""})
            log_performance_metric(logger, "srocc", report.srocc, field_name)
        except UndefinedCorrelationError as e:
            logger.warning(f"Correlation undefined for {field_name}: {e}")
            rows.append({"quality_field": field_name, "lcc": np.nan, "srocc": np.nan, "mse": np.nan,
                         "records": len(probes), "note": "undefined"})
    return pd.DataFrame(rows, columns=["quality_field", "lcc", "srocc", "mse", "records", "note"])


@log_function_call(logger, "cmd_report")
def cmd_report(args) -> int:
    print_resolved("report", _settings(args))
    records, _ = _load(args)
    train_records, test_records = _report_splits(records)
    fields = args.quality_fields or default_quality_fields(records)
    out_dir = resolve_output_path(args.out)

    correlations = _correlation_rows(test_records, fields)
    _write_frame(correlations, out_dir / "correlation.csv")
    _write_frame(correlations, out_dir / "correlation.txt", text=True)

    grid_rows = []
    for field_name in fields:
        if field_name in THRESHOLD_GATED:
            strategy = "threshold"
            curve = irr_eer_curve(test_records, field_name, steps=args.steps)
        else:
            strategy = "band"
            train_probes = [r for r in train_records if not r.is_enrollment]
            curve = band_curve(quality_values(train_probes, field_name), test_records, field_name, steps=args.steps)
        _write_frame(curve.to_frame(), out_dir / "curves" / f"{strategy}_{field_name}.csv")
        for point in eer_at_irr(curve, EER_IRR_GRID):
            grid_rows.append({"quality_field": field_name, "strategy": strategy,
                              "target_irr": point.target_irr, "irr": point.irr, "eer": point.eer})

    grid = pd.DataFrame(grid_rows, columns=["quality_field", "strategy", "target_irr", "irr", "eer"])
    _write_frame(grid, out_dir / "eer_at_irr.csv")
    wide = grid.pivot(index="quality_field", columns="target_irr", values="eer").reindex(fields)
    wide.columns = [f"EER@{c:g}" for c in wide.columns]
    _write_frame(wide.reset_index(), out_dir / "eer_at_irr.txt", text=True)

    probes = [r for r in test_records if not r.is_enrollment]
    if probes and all(r.is_ideal is not None for r in probes) and any(r.is_ideal for r in probes):
        bench_irr, bench_eer = benchmark_point(test_records)
        full = eer(build_score_pairs(test_records)).eer
        _write_frame(pd.DataFrame([{"gate": "none", "irr": 0.0, "eer": full},
                                   {"gate": "ideal_only", "irr": bench_irr, "eer": bench_eer}]),
                     out_dir / "benchmark.csv")

    train_probes = [r for r in train_records if not r.is_enrollment]
    distributions = {
        field_name: quality_distribution(quality_values(train_probes, field_name)).as_dict()
        for field_name in fields
    }
    atomic_write_text(out_dir / "distributions.json", json.dumps(distributions, indent=2, sort_keys=True) + "\n")
    log_dataset_event(logger, "wrote report", out_dir, len(fields))
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "split": cmd_split,
    "label": cmd_label,
    "factors": cmd_factors,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "report": cmd_report,
}
