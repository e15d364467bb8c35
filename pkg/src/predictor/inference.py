"""
Batch inference over manifest records.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

from ..core_model.image_io import read_image
from ..core_model.manifest import resolve_path
from ..core_model.types import SampleRecord
from .network import IrisQualityNet, predict

logger = logging.getLogger(__name__)


def predict_records(model: IrisQualityNet, records: Sequence[SampleRecord],
                    base_dir: Union[str, Path] = ".") -> List[SampleRecord]:
    """Copies of the records with predicted_quality populated."""
    updated = []
    for record in records:
        image = read_image(resolve_path(base_dir, record.image_path))
        updated.append(predict(model, image, record).record)
    logger.info(f"Predicted quality for {len(updated)} samples")
    return updated
