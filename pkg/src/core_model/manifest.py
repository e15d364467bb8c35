"""
Dataset Manifest

Line-delimited JSON manifest: a `{"schema_version": 1}` header line followed by one
SampleRecord per line. Image and mask paths are stored as given; relative paths
are resolved against the manifest's directory.
"""

import os
import json
import logging
from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from config.config import (
    EMBEDDING_NORM_TOLERANCE,
    EMBEDDING_RENORMALIZE_RANGE,
    MANIFEST_SCHEMA_VERSION,
)
from ..utils.atomic_io import atomic_write_text
from .errors import DuplicateSampleError, EnrollmentError, ManifestError, ValidationError
from .types import Embedding, IrisGeometry, SampleRecord

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REQUIRED_FIELDS = (
    "sample_id",
    "class_id",
    "image_path",
    "geometry",
    "occlusion_path",
    "embedding",
    "is_enrollment",
)
OPTIONAL_FIELDS = (
    "dfs_label",
    "predicted_quality",
    "severity",
    "is_ideal",
    "split",
    "factors",
)


def record_to_dict(record: SampleRecord) -> Dict:
    """Serialize a record; every optional field is written, None as null."""
    return {
        "sample_id": record.sample_id,
        "class_id": record.class_id,
        "image_path": record.image_path,
        "geometry": record.geometry.to_dict(),
        "occlusion_path": record.occlusion_path,
        "embedding": record.embedding.tolist(),
        "is_enrollment": record.is_enrollment,
        "dfs_label": record.dfs_label,
        "predicted_quality": record.predicted_quality,
        "severity": record.severity,
        "is_ideal": record.is_ideal,
        "split": record.split,
        "factors": dict(record.factors),
    }


def _load_embedding(values, sample_id: str) -> Embedding:
    arr = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) <= EMBEDDING_NORM_TOLERANCE:
        return Embedding(arr, normalize=False)
    low, high = EMBEDDING_RENORMALIZE_RANGE
    if low <= norm <= high:
        logger.warning(f"{sample_id}: embedding norm {norm:.6f} renormalized to 1")
        return Embedding(arr)
    raise ManifestError(f"{sample_id}: embedding norm {norm:.6f} outside [{low}, {high}], rejected")


def record_from_dict(data: Dict) -> SampleRecord:
    """Parse and validate one manifest record."""
    if not isinstance(data, dict):
        raise ManifestError(f"Record must be an object, got {type(data).__name__}")
    missing = [name for name in REQUIRED_FIELDS if name not in data]
    if missing:
        raise ManifestError(f"Record {data.get('sample_id')!r} missing fields: {missing}")
    unknown = sorted(set(data) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS))
    if unknown:
        raise ManifestError(f"Record {data.get('sample_id')!r} has unknown fields: {unknown}")

    sample_id = str(data["sample_id"])
    if not isinstance(data["is_enrollment"], bool):
        raise ManifestError(f"{sample_id}: is_enrollment must be a boolean")
    try:
        embedding_values = [float(v) for v in data["embedding"]]
    except (TypeError, ValueError) as e:
        raise ManifestError(f"{sample_id}: embedding must be a number array") from e

    if data.get("is_ideal") is not None and not isinstance(data["is_ideal"], bool):
        raise ManifestError(f"{sample_id}: is_ideal must be a boolean or null")
    factors = data.get("factors") or {}
    if not isinstance(factors, dict):
        raise ManifestError(f"{sample_id}: factors must be an object")

    try:
        return SampleRecord(
            sample_id=sample_id,
            class_id=str(data["class_id"]),
            image_path=str(data["image_path"]),
            geometry=IrisGeometry.from_dict(data["geometry"]),
            occlusion_path=str(data["occlusion_path"]),
            embedding=_load_embedding(embedding_values, sample_id),
            is_enrollment=data["is_enrollment"],
            dfs_label=data.get("dfs_label"),
            predicted_quality=data.get("predicted_quality"),
            severity=data.get("severity"),
            is_ideal=data.get("is_ideal"),
            split=data.get("split"),
            factors=factors,
        )
    except ValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ManifestError(f"{sample_id}: invalid field value: {e}") from e


def check_unique_ids(records: Iterable[SampleRecord]):
    counts = Counter(record.sample_id for record in records)
    duplicates = sorted(sample_id for sample_id, n in counts.items() if n > 1)
    if duplicates:
        raise DuplicateSampleError(f"Duplicate sample_id values: {duplicates}")


def enrollment_index(records: Iterable[SampleRecord]) -> Dict[str, SampleRecord]:
    """
    Map every class to its single enrollment record.

    Raises:
        EnrollmentError: listing classes with zero or several enrollments
    """
    by_class = defaultdict(list)
    for record in records:
        by_class[record.class_id].append(record)

    problems = []
    index = {}
    for class_id in sorted(by_class):
        enrollments = [r for r in by_class[class_id] if r.is_enrollment]
        if len(enrollments) != 1:
            problems.append(f"{class_id} ({len(enrollments)} enrollments)")
        else:
            index[class_id] = enrollments[0]
    if problems:
        raise EnrollmentError(f"Classes without exactly one enrollment: {', '.join(problems)}")
    return index


def load_manifest(path: PathLike, require_enrollment: bool = True) -> List[SampleRecord]:
    """
    Load and validate a manifest.

    Args:
        path: Manifest file
        require_enrollment: Enforce exactly one enrollment record per class

    Returns:
        Records in file order
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ManifestError(f"{path}: not valid UTF-8: {e}") from e
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return []

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}:1: invalid header: {e}") from e
    if not isinstance(header, dict) or "schema_version" not in header:
        raise ManifestError(f"{path}:1: missing schema_version header line")
    if header["schema_version"] != MANIFEST_SCHEMA_VERSION:
        raise ManifestError(
            f"{path}: schema_version {header['schema_version']} not supported "
            f"(expected {MANIFEST_SCHEMA_VERSION})"
        )

    records = []
    for line_number, line in enumerate(lines[1:], start=2):
        try:
            records.append(record_from_dict(json.loads(line)))
        except json.JSONDecodeError as e:
            raise ManifestError(f"{path}:{line_number}: invalid JSON: {e}") from e
        except ValidationError as e:
            raise type(e)(f"{path}:{line_number}: {e}") from e

    check_unique_ids(records)
    if require_enrollment:
        enrollment_index(records)
    logger.debug(f"Loaded {len(records)} records from {path}")
    return records


def save_manifest(records: Iterable[SampleRecord], path: PathLike) -> Path:
    """Write records atomically; load_manifest inverts this exactly."""
    records = list(records)
    check_unique_ids(records)
    lines = [json.dumps({"schema_version": MANIFEST_SCHEMA_VERSION})]
    lines.extend(json.dumps(record_to_dict(r), sort_keys=True) for r in records)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def resolve_path(base_dir: PathLike, stored: str) -> Path:
    """Resolve a stored image/mask path against the manifest directory."""
    stored_path = Path(stored)
    return stored_path if stored_path.is_absolute() else Path(base_dir) / stored_path


def rebase_paths(records: Iterable[SampleRecord], from_dir: PathLike, to_dir: PathLike) -> List[SampleRecord]:
    """Rewrite relative image/mask paths so they stay valid from a new manifest directory."""
    from_dir = Path(from_dir).resolve()
    to_dir = Path(to_dir).resolve()
    if from_dir == to_dir:
        return list(records)

    def move(stored: str) -> str:
        if Path(stored).is_absolute():
            return stored
        return Path(os.path.relpath(from_dir / stored, to_dir)).as_posix()

    return [
        r.with_updates(image_path=move(r.image_path), occlusion_path=move(r.occlusion_path))
        for r in records
    ]
