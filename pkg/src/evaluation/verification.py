"""
Verification Error Rates

Genuine/impostor score pairs, FAR/FRR at a threshold and the equal error rate.
A score is accepted when it is greater than or equal to the threshold.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from ..core_model.errors import ValidationError
from ..core_model.manifest import enrollment_index
from ..core_model.types import SampleRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ScorePairs:
    """Genuine and impostor match scores."""
    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        genuine = np.asarray(self.genuine, dtype=np.float64).ravel()
        impostor = np.asarray(self.impostor, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(genuine)) and np.all(np.isfinite(impostor))):
            raise ValidationError("Scores must be finite")
        object.__setattr__(self, "genuine", genuine)
        object.__setattr__(self, "impostor", impostor)

    def require_both(self):
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise ValidationError(
                f"Need genuine and impostor scores (got {self.genuine.size} and {self.impostor.size})"
            )


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float
    degenerate: bool = False


def far_frr(pairs: ScorePairs, threshold: float) -> Tuple[float, float]:
    """False accept rate of impostors and false reject rate of genuines at a threshold."""
    pairs.require_both()
    far = np.count_nonzero(pairs.impostor >= threshold) / pairs.impostor.size
    frr = np.count_nonzero(pairs.genuine < threshold) / pairs.genuine.size
    return float(far), float(frr)


def _rates(pairs: ScorePairs, thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    genuine = np.sort(pairs.genuine)
    impostor = np.sort(pairs.impostor)
    far = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return far, frr


def eer(pairs: ScorePairs) -> EerResult:
    """
    Equal error rate by sweeping every distinct score as a threshold.

    Where far - frr changes sign between adjacent thresholds both rates are
    linearly interpolated to their crossing. When all scores are identical the
    result is flagged degenerate.
    """
    pairs.require_both()
    scores = np.unique(np.concatenate([pairs.genuine, pairs.impostor]))
    # One threshold above every score, where everything is rejected
    thresholds = np.append(scores, np.nextafter(scores[-1], np.inf))
    far, frr = _rates(pairs, thresholds)
    diff = far - frr
    degenerate = scores.size == 1

    exact = np.flatnonzero(diff == 0)
    if exact.size:
        k = int(exact[0])
        return EerResult(float(far[k]), float(thresholds[k]), degenerate)

    # diff is non-increasing, +1 at the lowest threshold and -1 past the highest
    k = int(np.flatnonzero(diff > 0)[-1])
    alpha = diff[k] / (diff[k] - diff[k + 1])
    rate = far[k] + alpha * (far[k + 1] - far[k])
    threshold = thresholds[k] + alpha * (thresholds[k + 1] - thresholds[k])
    return EerResult(float(rate), float(threshold), degenerate)


def build_score_pairs(records: Sequence[SampleRecord]) -> ScorePairs:
    """
    Enrollment-gallery protocol over probe records.

    Each probe is scored against its own class enrollment (genuine) and against
    every other class enrollment (impostor). Enrollment records are not probes.
    """
    probes, gallery, gallery_classes = probe_score_matrix(records)
    own = gallery_classes[None, :] == np.array([p.class_id for p in probes])[:, None]
    return ScorePairs(genuine=gallery[own], impostor=gallery[~own])


def probe_score_matrix(records: Sequence[SampleRecord]):
    """
    Score every probe against every enrollment.

    Returns:
        (probes, scores of shape (n_probes, n_classes), class ids of the columns)
    """
    enrollments: Dict[str, SampleRecord] = enrollment_index(records)
    class_ids = sorted(enrollments)
    gallery = np.stack([enrollments[c].embedding.values for c in class_ids])
    probes = [r for r in records if not r.is_enrollment]
    if probes:
        probe_matrix = np.stack([p.embedding.values for p in probes])
        if probe_matrix.shape[1] != gallery.shape[1]:
            raise ValidationError("Probe and enrollment embeddings have different dimensions")
        scores = np.clip(probe_matrix @ gallery.T, -1.0, 1.0)
    else:
        scores = np.zeros((0, len(class_ids)))
    return probes, scores, np.array(class_ids)
