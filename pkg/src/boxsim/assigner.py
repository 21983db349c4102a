"""Threshold-plus-fallback label assignment over a pairwise score matrix.

Each anchor gets an integer label: a ground-truth row index (>= 0),
NEGATIVE (-1), or IGNORE (-2).  Stage one thresholds each anchor on its
best score; stage two guarantees coverage by relabeling, for every
ground truth left without a positive, its single best anchor, provided
the score clears a minimum and the anchor is not already a threshold
positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .datasets import GroundTruth, SizeBucket, size_bucket
from .geometry import CBox, MetricMatrix

__all__ = [
    "NEGATIVE",
    "IGNORE",
    "Thresholds",
    "AssignmentResult",
    "assign",
    "BucketStats",
    "merge_bucket_stats",
    "match_stats",
]

NEGATIVE = -1
IGNORE = -2


@dataclass(frozen=True, slots=True)
class Thresholds:
    """Assignment thresholds; strict comparisons on both sides.

    An anchor whose best score is > pos becomes a positive for that
    ground truth, < neg becomes a negative, anything else is ignored.
    ``min_pos`` gates the fallback stage: an unmatched ground truth
    claims its best anchor only when the score is > min_pos.
    """

    pos: float = 0.7
    neg: float = 0.3
    min_pos: float = 0.3

    def __post_init__(self) -> None:
        for name in ("pos", "neg", "min_pos"):
            object.__setattr__(self, name, float(getattr(self, name)))
        values = (self.pos, self.neg, self.min_pos)
        if not all(np.isfinite(values)):
            raise ValueError(f"thresholds must be finite, got {self}")
        if not (0.0 <= self.neg <= self.pos <= 1.0):
            raise ValueError(f"need 0 <= neg <= pos <= 1, got neg={self.neg}, "
                             f"pos={self.pos}")
        if not 0.0 <= self.min_pos <= 1.0:
            raise ValueError(f"min_pos must lie in [0, 1], got {self.min_pos}")


@dataclass(frozen=True)
class AssignmentResult:
    """Labels plus per-ground-truth match bookkeeping.

    Attributes:
        anchor_labels: (A,) int64; gt row index >= 0, NEGATIVE, or IGNORE.
        gt_match_counts: (G,) final positive anchors per ground truth.
        gt_threshold_match_counts: (G,) positives from the threshold
            stage alone (before fallback).
        gt_best_anchor: (G,) index of each ground truth's best anchor
            (ties broken toward the lower anchor index).
        gt_best_score: (G,) that best score.
    """

    anchor_labels: np.ndarray
    gt_match_counts: np.ndarray
    gt_threshold_match_counts: np.ndarray
    gt_best_anchor: np.ndarray
    gt_best_score: np.ndarray

    @property
    def num_anchors(self) -> int:
        return self.anchor_labels.shape[0]

    @property
    def num_gts(self) -> int:
        return self.gt_match_counts.shape[0]


def assign(matrix: MetricMatrix | np.ndarray,
           thresholds: Thresholds = Thresholds()) -> AssignmentResult:
    """Assign labels for a (gts x anchors) score matrix.

    Deterministic: every argmax tie breaks toward the lower index, and
    when two unmatched ground truths claim the same fallback anchor the
    higher score wins (ties toward the lower ground-truth index).  A
    fallback claim never overrides a threshold positive.
    """
    scores = matrix.values if isinstance(matrix, MetricMatrix) else np.asarray(matrix)
    if scores.ndim != 2:
        raise ValueError(f"score matrix must be 2-D, got shape {scores.shape}")
    num_gts, num_anchors = scores.shape
    if num_gts == 0 or num_anchors == 0:
        raise ValueError(f"score matrix must be non-empty, got {scores.shape}")

    anchor_best_gt = np.argmax(scores, axis=0)
    anchor_best = scores[anchor_best_gt, np.arange(num_anchors)]

    labels = np.full(num_anchors, IGNORE, dtype=np.int64)
    labels[anchor_best < thresholds.neg] = NEGATIVE
    threshold_positive = anchor_best > thresholds.pos
    labels[threshold_positive] = anchor_best_gt[threshold_positive]
    threshold_counts = np.bincount(anchor_best_gt[threshold_positive],
                                   minlength=num_gts).astype(np.int64)

    gt_best_anchor = np.argmax(scores, axis=1)
    gt_best_score = scores[np.arange(num_gts), gt_best_anchor]

    # Fallback: unmatched gts claim their best anchor.  Contended
    # anchors go to the higher score, ties to the lower gt index; a
    # threshold positive is never overridden.
    claims: dict[int, tuple[float, int]] = {}
    for g in range(num_gts):
        if threshold_counts[g] > 0:
            continue
        best = float(gt_best_score[g])
        if not best > thresholds.min_pos:
            continue
        anchor = int(gt_best_anchor[g])
        if threshold_positive[anchor]:
            continue
        held = claims.get(anchor)
        if held is None or best > held[0]:
            claims[anchor] = (best, g)
    for anchor, (_, g) in claims.items():
        labels[anchor] = g

    positive = labels >= 0
    match_counts = np.bincount(labels[positive], minlength=num_gts).astype(np.int64)
    return AssignmentResult(anchor_labels=labels,
                            gt_match_counts=match_counts,
                            gt_threshold_match_counts=threshold_counts,
                            gt_best_anchor=gt_best_anchor.astype(np.int64),
                            gt_best_score=gt_best_score.astype(np.float64))


@dataclass(slots=True)
class BucketStats:
    """Per-size-bucket assignment aggregates; mergeable across images."""

    gt_count: int = 0
    positive_total: int = 0
    threshold_positive_total: int = 0
    unmatched: int = 0
    threshold_unmatched: int = 0
    best_score_total: float = 0.0

    @property
    def mean_positives(self) -> float:
        return self.positive_total / self.gt_count if self.gt_count else 0.0

    @property
    def unmatched_fraction(self) -> float:
        return self.unmatched / self.gt_count if self.gt_count else 0.0

    @property
    def threshold_unmatched_fraction(self) -> float:
        return self.threshold_unmatched / self.gt_count if self.gt_count else 0.0

    @property
    def mean_best_score(self) -> float:
        return self.best_score_total / self.gt_count if self.gt_count else 0.0


def merge_bucket_stats(a: Mapping[SizeBucket, BucketStats],
                       b: Mapping[SizeBucket, BucketStats]) -> dict[SizeBucket, BucketStats]:
    """Combine two per-bucket aggregates (e.g. from different images)."""
    out: dict[SizeBucket, BucketStats] = {}
    for bucket in SizeBucket:
        lhs = a.get(bucket)
        rhs = b.get(bucket)
        if lhs is None and rhs is None:
            continue
        merged = BucketStats()
        for part in (lhs, rhs):
            if part is None:
                continue
            merged.gt_count += part.gt_count
            merged.positive_total += part.positive_total
            merged.threshold_positive_total += part.threshold_positive_total
            merged.unmatched += part.unmatched
            merged.threshold_unmatched += part.threshold_unmatched
            merged.best_score_total += part.best_score_total
        out[bucket] = merged
    return out


def match_stats(result: AssignmentResult,
                gts: Sequence[GroundTruth | CBox]) -> dict[SizeBucket, BucketStats]:
    """Aggregate one image's assignment by ground-truth size bucket.

    ``gts`` may hold GroundTruth entries or plain CBox values, in the
    same row order as the assigned score matrix.
    """
    if len(gts) != result.num_gts:
        raise ValueError(f"got {len(gts)} ground truths for an assignment "
                         f"over {result.num_gts}")
    out: dict[SizeBucket, BucketStats] = {}
    for g, gt in enumerate(gts):
        bucket = size_bucket(gt.box if isinstance(gt, GroundTruth) else gt)
        stats = out.setdefault(bucket, BucketStats())
        stats.gt_count += 1
        stats.positive_total += int(result.gt_match_counts[g])
        stats.threshold_positive_total += int(result.gt_threshold_match_counts[g])
        if result.gt_match_counts[g] == 0:
            stats.unmatched += 1
        if result.gt_threshold_match_counts[g] == 0:
            stats.threshold_unmatched += 1
        stats.best_score_total += float(result.gt_best_score[g])
    return out
