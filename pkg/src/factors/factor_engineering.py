"""
Factor Table Pipeline

Computes the quality factors for every record of a manifest and returns them as a
pandas table (one row per sample), or caches them on the records themselves.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from config.config import FACTOR_NAMES
from ..core_model.image_io import read_image, read_mask
from ..core_model.manifest import resolve_path
from ..core_model.types import SampleRecord
from .quality_factors import FactorReport, factor_report

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["sample_id", "class_id", "is_enrollment", *FACTOR_NAMES]


class FactorEngineer:
    """Engineers hand-crafted quality factors from the images of a manifest."""

    def __init__(self, base_dir: Union[str, Path] = ".", threads: int = 1):
        self.base_dir = Path(base_dir)
        self.threads = max(1, int(threads))

    def compute_record(self, record: SampleRecord) -> FactorReport:
        """Load a record's image and mask and compute its factor report."""
        image = read_image(resolve_path(self.base_dir, record.image_path))
        mask = read_mask(resolve_path(self.base_dir, record.occlusion_path))
        return factor_report(image, record.geometry, mask)

    def compute_reports(self, records: Sequence[SampleRecord]) -> List[FactorReport]:
        """Factor reports in record order; per-record work may run on a thread pool."""
        if self.threads == 1:
            reports = [self.compute_record(r) for r in records]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                reports = list(pool.map(self.compute_record, records))
        logger.info(f"Computed {len(FACTOR_NAMES)} factors for {len(reports)} samples")
        return reports

    def build_table(self, records: Sequence[SampleRecord],
                    reports: Optional[Sequence[FactorReport]] = None) -> pd.DataFrame:
        """One row per sample with identity columns and the five factors."""
        if reports is None:
            reports = self.compute_reports(records)
        rows = [
            {
                "sample_id": record.sample_id,
                "class_id": record.class_id,
                "is_enrollment": record.is_enrollment,
                **report.as_dict(),
            }
            for record, report in zip(records, reports)
        ]
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    def annotate(self, records: Sequence[SampleRecord],
                 reports: Optional[Sequence[FactorReport]] = None) -> List[SampleRecord]:
        """Return copies of the records with their factors field populated."""
        if reports is None:
            reports = self.compute_reports(records)
        return [
            record.with_updates(factors={**record.factors, **report.as_dict()})
            for record, report in zip(records, reports)
        ]
