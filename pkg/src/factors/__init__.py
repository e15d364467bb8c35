"""
Quality Factors Package

Hand-crafted iris quality factors and the per-manifest factor table.
"""

from .quality_factors import (
    FactorReport,
    sharpness,
    iris_size,
    dilation,
    gray_level_spread,
    usable_area,
    factor_report,
)
from .factor_engineering import FactorEngineer, TABLE_COLUMNS

__all__ = [
    'FactorReport',
    'sharpness',
    'iris_size',
    'dilation',
    'gray_level_spread',
    'usable_area',
    'factor_report',
    'FactorEngineer',
    'TABLE_COLUMNS',
]
