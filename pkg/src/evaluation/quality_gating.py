"""
Quality Gating

Image rejection rate, IRR-EER curves from quality thresholds, the band-threshold
baseline, the ideal-image benchmark gate and EER read-outs on an IRR grid.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.config import EER_IRR_GRID, FACTOR_NAMES
from ..core_model.errors import ConfigError, ValidationError
from ..core_model.types import SampleRecord
from .verification import ScorePairs, eer, probe_score_matrix

logger = logging.getLogger(__name__)

QUALITY_FIELDS = ("dfs_label", "predicted_quality", "severity", *FACTOR_NAMES)
CURVE_COLUMNS = ["irr", "eer", "threshold"]


@dataclass(frozen=True)
class CurvePoint:
    irr: float
    eer: float
    quality_threshold: float


@dataclass
class IrrEerCurve:
    """Points ordered by strictly increasing IRR."""
    points: List[CurvePoint]
    quality_field: str = ""
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        irrs = [p.irr for p in self.points]
        if any(b <= a for a, b in zip(irrs, irrs[1:])):
            raise ValidationError("IRR must be strictly increasing along the curve")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(p.irr, p.eer, p.quality_threshold) for p in self.points],
            columns=CURVE_COLUMNS,
        )


@dataclass(frozen=True)
class GridPoint:
    target_irr: float
    irr: float
    eer: float


def irr(discarded: int, total: int) -> float:
    """Fraction of captured images discarded by the quality gate."""
    if total <= 0:
        raise ValidationError("IRR needs a positive total")
    if not 0 <= discarded <= total:
        raise ValidationError(f"discarded must lie in [0, {total}], got {discarded}")
    return discarded / total


def quality_value(record: SampleRecord, quality_field: str) -> Optional[float]:
    """Select dfs_label, predicted_quality or a cached factor from a record."""
    if quality_field in ("dfs_label", "predicted_quality", "severity"):
        return getattr(record, quality_field)
    if quality_field in record.factors:
        return record.factors[quality_field]
    if quality_field in FACTOR_NAMES:
        return None
    raise ConfigError(f"Unknown quality field {quality_field!r}; expected one of {QUALITY_FIELDS}")


def quality_values(records: Sequence[SampleRecord], quality_field: str) -> np.ndarray:
    values = [quality_value(r, quality_field) for r in records]
    missing = [r.sample_id for r, v in zip(records, values) if v is None]
    if missing:
        raise ValidationError(
            f"{len(missing)} records lack {quality_field!r} (first: {missing[0]})"
        )
    return np.asarray(values, dtype=np.float64)


class _GatedScores:
    """Genuine and impostor scores per probe, so any survivor subset is cheap to score."""

    def __init__(self, records: Sequence[SampleRecord]):
        probes, scores, class_ids = probe_score_matrix(records)
        if len(class_ids) < 2:
            raise ValidationError(f"Evaluation needs at least 2 classes, got {len(class_ids)}")
        if not probes:
            raise ValidationError("Evaluation needs at least one probe record")
        own = class_ids[None, :] == np.array([p.class_id for p in probes])[:, None]
        self.probes = probes
        self.genuine = scores[own]
        self.impostor = scores[~own].reshape(len(probes), len(class_ids) - 1)

    def __len__(self) -> int:
        return len(self.probes)

    def pairs(self, keep: np.ndarray) -> ScorePairs:
        return ScorePairs(genuine=self.genuine[keep], impostor=self.impostor[keep].ravel())


def irr_eer_curve(records: Sequence[SampleRecord], quality_field: str = "dfs_label",
                  steps: int = 20) -> IrrEerCurve:
    """
    Sweep a quality threshold so IRR takes `steps` evenly spaced targets in [0, 1).

    At each threshold q, probes with quality < q are discarded and the EER of the
    survivors is recorded. Enrollment records are never discarded. Thresholds that
    repeat an already reached IRR are skipped.
    """
    if steps < 2:
        raise ConfigError(f"steps must be at least 2, got {steps}")
    gated = _GatedScores(records)
    values = quality_values(gated.probes, quality_field)
    ordered = np.sort(values)
    total = len(gated)

    curve = IrrEerCurve(points=[], quality_field=quality_field)
    for target in np.arange(steps) / steps:
        threshold = float(ordered[int(np.floor(target * total))])
        keep = values >= threshold
        discarded = total - int(keep.sum())
        rate = irr(discarded, total)
        if curve.points and rate <= curve.points[-1].irr:
            continue
        if not keep.any():
            note = f"truncated at target IRR {target:.3f}: no probe survives"
            curve.notes.append(note)
            logger.warning(f"{quality_field}: {note}")
            break
        curve.points.append(CurvePoint(rate, eer(gated.pairs(keep)).eer, threshold))

    logger.info(f"IRR-EER curve for {quality_field}: {len(curve.points)} points")
    return curve


def band_threshold(values: Sequence[float], mu: float, delta: float) -> np.ndarray:
    """Keep mask for values in [mu - delta, mu + delta)."""
    if delta < 0:
        raise ConfigError(f"delta must be non-negative, got {delta}")
    values = np.asarray(values, dtype=np.float64)
    return (values >= mu - delta) & (values < mu + delta)


def band_curve(train_values: Sequence[float], records: Sequence[SampleRecord], quality_field: str,
               deltas: Optional[Sequence[float]] = None, steps: int = 20) -> IrrEerCurve:
    """
    IRR-EER curve of the band-threshold baseline.

    mu is the mean of the training values; delta shrinks from infinity so IRR
    grows. By default the deltas are quantiles of |value - mu| on the evaluated
    probes. The threshold column of each point holds delta.
    """
    train_values = np.asarray(train_values, dtype=np.float64)
    if train_values.size == 0:
        raise ValidationError("band_curve needs training values to estimate mu")
    mu = float(train_values.mean())
    gated = _GatedScores(records)
    values = quality_values(gated.probes, quality_field)
    total = len(gated)

    if deltas is None:
        spread = np.abs(values - mu)
        # nextafter keeps the value at each quantile inside the half-open band
        deltas = [np.inf] + [float(np.nextafter(q, np.inf)) for q in np.quantile(spread, 1.0 - np.arange(1, steps) / steps)]
    deltas = sorted((float(d) for d in deltas), reverse=True)

    curve = IrrEerCurve(points=[], quality_field=quality_field)
    for delta in deltas:
        keep = band_threshold(values, mu, delta)
        rate = irr(total - int(keep.sum()), total)
        if curve.points and rate <= curve.points[-1].irr:
            continue
        if not keep.any():
            curve.notes.append(f"truncated at delta {delta:g}: no probe survives")
            break
        curve.points.append(CurvePoint(rate, eer(gated.pairs(keep)).eer, delta))

    logger.info(f"Band-threshold curve for {quality_field} (mu={mu:.4g}): {len(curve.points)} points")
    return curve


def benchmark_point(records: Sequence[SampleRecord]) -> Tuple[float, float]:
    """(irr, eer) after discarding every probe not flagged as ideal."""
    gated = _GatedScores(records)
    flags = [p.is_ideal for p in gated.probes]
    if any(flag is None for flag in flags):
        raise ValidationError("Benchmark gate needs is_ideal on every probe")
    keep = np.array(flags, dtype=bool)
    if not keep.any():
        raise ValidationError("Benchmark gate discards every probe")
    return irr(len(gated) - int(keep.sum()), len(gated)), eer(gated.pairs(keep)).eer


def eer_at_irr(curve: IrrEerCurve, grid: Sequence[float] = EER_IRR_GRID) -> List[GridPoint]:
    """For each grid IRR, the curve point with the largest IRR not exceeding it."""
    if not curve.points:
        raise ValidationError("Curve has no points")
    result = []
    for target in grid:
        eligible = [p for p in curve.points if p.irr <= target + 1e-12]
        point = eligible[-1] if eligible else curve.points[0]
        result.append(GridPoint(float(target), point.irr, point.eer))
    return result
