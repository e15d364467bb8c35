"""
Evaluation Package

Verification error rates, IRR-EER curves, band-threshold baselines and the
correlation criteria used to compare quality scores against DFS.
"""

from .verification import ScorePairs, EerResult, far_frr, eer, build_score_pairs, probe_score_matrix
from .quality_gating import (
    QUALITY_FIELDS,
    CurvePoint,
    IrrEerCurve,
    GridPoint,
    irr,
    quality_value,
    quality_values,
    irr_eer_curve,
    band_threshold,
    band_curve,
    benchmark_point,
    eer_at_irr,
)
from .correlation import (
    CorrelationReport,
    QualityDistribution,
    lcc,
    srocc,
    mse,
    correlation_report,
    quality_distribution,
)

__all__ = [
    'ScorePairs',
    'EerResult',
    'far_frr',
    'eer',
    'build_score_pairs',
    'probe_score_matrix',
    'QUALITY_FIELDS',
    'CurvePoint',
    'IrrEerCurve',
    'GridPoint',
    'irr',
    'quality_value',
    'quality_values',
    'irr_eer_curve',
    'band_threshold',
    'band_curve',
    'benchmark_point',
    'eer_at_irr',
    'CorrelationReport',
    'QualityDistribution',
    'lcc',
    'srocc',
    'mse',
    'correlation_report',
    'quality_distribution',
]
