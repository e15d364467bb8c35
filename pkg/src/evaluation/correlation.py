"""
Correlation Criteria

LCC, SROCC and MSE between a quality score and the DFS label, plus distribution
summaries of quality values.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Dict, List, Sequence

import numpy as np
from scipy import stats
from sklearn.metrics import mean_squared_error

from ..core_model.errors import DimensionMismatchError, UndefinedCorrelationError, ValidationError
from ..core_model.types import SampleRecord
from .quality_gating import quality_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelationReport:
    lcc: float
    srocc: float
    mse: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class QualityDistribution:
    """Summary of a quality field on one split."""
    count: int
    mean: float
    std: float
    quantiles: Dict[str, float]
    histogram: List[int]
    bin_edges: List[float]

    def as_dict(self) -> Dict:
        return asdict(self)


def _paired(x, y, minimum: int):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DimensionMismatchError(f"Lists differ in length: {x.size} vs {y.size}")
    if x.size < minimum:
        raise ValidationError(f"Need at least {minimum} values, got {x.size}")
    return x, y


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(np.dot(xm, xm))
    syy = float(np.dot(ym, ym))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("Correlation is undefined for a list with zero variance")
    return float(np.clip(np.dot(xm, ym) / np.sqrt(sxx * syy), -1.0, 1.0))


def lcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson linear correlation coefficient."""
    return _pearson(*_paired(x, y, 2))


def srocc(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of tie-averaged ranks."""
    x, y = _paired(x, y, 2)
    return _pearson(stats.rankdata(x, method="average"), stats.rankdata(y, method="average"))


def mse(x: Sequence[float], y: Sequence[float]) -> float:
    """Mean of squared differences."""
    x, y = _paired(x, y, 1)
    return float(mean_squared_error(x, y))


def correlation_report(records: Sequence[SampleRecord], quality_field: str) -> CorrelationReport:
    """LCC, SROCC and MSE of a quality field against dfs_label over probe records."""
    probes = [r for r in records if not r.is_enrollment]
    quality = quality_values(probes, quality_field)
    labels = quality_values(probes, "dfs_label")
    report = CorrelationReport(lcc=lcc(quality, labels), srocc=srocc(quality, labels), mse=mse(quality, labels))
    logger.info(f"Correlation of {quality_field} with DFS: {report}")
    return report


def quality_distribution(values: Sequence[float], bins: int = 20) -> QualityDistribution:
    """Mean, spread, quantiles and a fixed-bin histogram of quality values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("Distribution of an empty list")
    histogram, edges = np.histogram(values, bins=bins)
    levels = (0.05, 0.25, 0.5, 0.75, 0.95)
    return QualityDistribution(
        count=int(values.size),
        mean=float(values.mean()),
        std=float(values.std()),
        quantiles={f"q{int(level * 100):02d}": float(q) for level, q in zip(levels, np.quantile(values, levels))},
        histogram=[int(c) for c in histogram],
        bin_edges=[float(e) for e in edges],
    )
