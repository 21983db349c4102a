"""Greedy non-maximum suppression parameterized by any pairwise metric.

The keeper loop visits detections in score order (ties toward the
earlier detection) and suppresses every remaining detection whose
similarity to the keeper is strictly above the threshold.  Running the
same loop with a similarity metric that is better conditioned for tiny
boxes (e.g. calibrated simd instead of iou) changes which overlaps are
considered duplicates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .datasets import DatasetFormatError, DatasetReadError
from .geometry import CBox, PairwiseMetric, as_box_array

__all__ = [
    "Detection",
    "greedy_suppress",
    "load_detections",
    "save_detections",
]


@dataclass(frozen=True, slots=True)
class Detection:
    """A scored box; score in [0, 1]."""

    box: CBox
    score: float
    category_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", float(self.score))
        object.__setattr__(self, "category_id", int(self.category_id))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def greedy_suppress(detections: Sequence[Detection], metric: PairwiseMetric,
                    threshold: float, class_aware: bool = False) -> list[int]:
    """Return indices of kept detections, ascending.

    Args:
        detections: scored boxes; an empty list yields an empty result.
        metric: bound pairwise metric (see geometry.make_metric).
        threshold: suppression cut in [0, 1]; a detection is removed
            when its similarity to a kept detection is strictly greater.
        class_aware: when True, only detections sharing the keeper's
            category_id are suppressed by it.
    """
    threshold = float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    if not detections:
        return []

    boxes = as_box_array([d.box for d in detections])
    scores = np.array([d.score for d in detections], dtype=np.float64)
    categories = np.array([d.category_id for d in detections], dtype=np.int64)
    n = boxes.shape[0]

    # Score descending, original index ascending on ties.
    order = np.lexsort((np.arange(n), -scores))
    alive = np.ones(n, dtype=bool)
    kept: list[int] = []
    for i in order:
        i = int(i)
        if not alive[i]:
            continue
        alive[i] = False
        kept.append(i)
        candidates = np.nonzero(
            alive & (categories == categories[i]) if class_aware else alive)[0]
        if candidates.size == 0:
            continue
        row = metric.matrix(boxes[i:i + 1], boxes[candidates]).values[0]
        alive[candidates[row > threshold]] = False
    return sorted(kept)


def save_detections(detections: Sequence[Detection], path: str | Path) -> None:
    """Write detections as a JSON array of {bbox, score, category_id}
    rows, bbox in center form [cx, cy, w, h]."""
    rows = [{"bbox": [d.box.cx, d.box.cy, d.box.w, d.box.h],
             "score": d.score, "category_id": d.category_id}
            for d in detections]
    Path(path).write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_detections(path: str | Path) -> list[Detection]:
    """Read a detections JSON array written by save_detections."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetReadError(f"cannot read detections file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise DatasetFormatError(f"{path}: expected a JSON array of detections")
    out = []
    for i, row in enumerate(doc):
        if not isinstance(row, dict) or "bbox" not in row or "score" not in row:
            raise DatasetFormatError(f"{path}: row {i} needs 'bbox' and 'score'")
        bbox = row["bbox"]
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise DatasetFormatError(f"{path}: row {i} bbox must be "
                                     f"[cx, cy, w, h]")
        try:
            box = CBox(*(float(v) for v in bbox))
            det = Detection(box=box, score=float(row["score"]),
                            category_id=int(row.get("category_id", 0)))
        except (TypeError, ValueError) as exc:
            raise DatasetFormatError(f"{path}: row {i}: {exc}") from exc
        out.append(det)
    return out
