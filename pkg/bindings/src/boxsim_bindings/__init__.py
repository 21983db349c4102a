"""Array-in, array-out bindings over the boxsim core.

Detection frameworks mostly traffic in bare numeric buffers rather
than in boxsim's dataclasses.  This package adapts that calling style:
boxes arrive as flat length-4N or (N, 4) buffers of center-form
(cx, cy, w, h) values, labels and kept-indices leave as int64 arrays,
and every computation is delegated to boxsim unchanged, so bound
results are bit-for-bit equal to core results.  No numeric code lives
here.

Label sentinels follow the common assigner convention: a matched
ground-truth row index (>= 0), NEGATIVE (-1), or IGNORE (-2).
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

import boxsim
from boxsim import IGNORE, NEGATIVE, load_norm_params

__all__ = [
    "NEGATIVE",
    "IGNORE",
    "as_box_buffer",
    "bind_simd_matrix",
    "bind_metric_matrix",
    "bind_assign",
    "bind_nms",
    "load_norm_params",
]

__version__ = "0.1.0"


def as_box_buffer(buf: Any) -> np.ndarray:
    """Coerce a box buffer to a validated (N, 4) float64 array.

    Accepts a flat buffer of length 4N or anything of shape (N, 4);
    values are preserved bit-for-bit.  Raises ValueError with the
    offending dimensions for any other shape, and for non-positive box
    sizes or non-finite values.
    """
    arr = np.asarray(buf, dtype=np.float64)
    if arr.ndim == 1:
        if arr.size % 4:
            raise ValueError(f"flat box buffer length {arr.size} is not "
                             f"divisible by 4")
        arr = arr.reshape(-1, 4)
    return boxsim.as_box_array(arr)


def _pair_buffers(gts: Any, anchors: Any) -> tuple[np.ndarray, np.ndarray]:
    g = as_box_buffer(gts)
    a = as_box_buffer(anchors)
    if g.shape[0] == 0 or a.shape[0] == 0:
        raise ValueError(f"need at least one box on each side, got "
                         f"{g.shape[0]} ground truths (shape {g.shape}) and "
                         f"{a.shape[0]} anchors (shape {a.shape})")
    return g, a


def _bound_metric(name: str, *, m: float | None = None,
                  n: float | None = None, mode: str = "both",
                  scale: float | None = None, c: float = 12.8,
                  beta: float = 1.0) -> boxsim.PairwiseMetric:
    norm_params = None
    if name == "simd":
        if m is None or n is None:
            raise ValueError("simd needs both m and n")
        norm_params = boxsim.NormParams(m=m, n=n)
    return boxsim.make_metric(name, norm_params=norm_params,
                              norm_mode=boxsim.NormMode.from_name(mode),
                              scale=scale, c=c, beta=beta)


def bind_simd_matrix(gts: Any, anchors: Any, m: float, n: float,
                     mode: str = "both") -> np.ndarray:
    """Pairwise simd scores as an (N, Q) float64 array.

    ``mode`` is a normalization-mode name: both, width, height, or
    none.  Results equal boxsim.simd_matrix bit-for-bit.
    """
    g, a = _pair_buffers(gts, anchors)
    return boxsim.simd_matrix(g, a, boxsim.NormParams(m=m, n=n),
                              mode=boxsim.NormMode.from_name(mode)).values


def bind_metric_matrix(name: str, gts: Any, anchors: Any, *,
                       m: float | None = None, n: float | None = None,
                       mode: str = "both", scale: float | None = None,
                       c: float = 12.8, beta: float = 1.0) -> np.ndarray:
    """Pairwise scores for any core metric: iou, simd, dotd, nwd, rfd.

    simd takes ``m``, ``n``, and ``mode``; dotd takes ``scale``; nwd
    takes ``c``; rfd takes ``beta``.
    """
    g, a = _pair_buffers(gts, anchors)
    metric = _bound_metric(name, m=m, n=n, mode=mode, scale=scale, c=c,
                           beta=beta)
    return metric.matrix(g, a).values


def bind_assign(matrix: Any, pos: float = 0.7, neg: float = 0.3,
                min_pos: float = 0.3) -> np.ndarray:
    """Label each anchor from a (gts x anchors) score buffer.

    Returns an int64 array: ground-truth row index (>= 0), NEGATIVE, or
    IGNORE — identical to boxsim.assign's labeling.
    """
    scores = np.asarray(matrix, dtype=np.float64)
    thresholds = boxsim.Thresholds(pos=pos, neg=neg, min_pos=min_pos)
    return boxsim.assign(scores, thresholds).anchor_labels


def bind_nms(boxes: Any, scores: Sequence[float], threshold: float, *,
             metric: str = "iou", category_ids: Sequence[int] | None = None,
             class_aware: bool = False, m: float | None = None,
             n: float | None = None, mode: str = "both",
             scale: float | None = None, c: float = 12.8,
             beta: float = 1.0) -> np.ndarray:
    """Greedy suppression over box/score buffers; kept indices, ascending.

    Metric parameters are as in bind_metric_matrix.  Results equal
    boxsim.greedy_suppress on the same detections.
    """
    arr = as_box_buffer(boxes)
    score_arr = np.asarray(scores, dtype=np.float64)
    if score_arr.shape != (arr.shape[0],):
        raise ValueError(f"scores must have shape ({arr.shape[0]},) to match "
                         f"{arr.shape[0]} boxes, got {score_arr.shape}")
    if category_ids is None:
        cat_arr = np.zeros(arr.shape[0], dtype=np.int64)
    else:
        cat_arr = np.asarray(category_ids, dtype=np.int64)
        if cat_arr.shape != (arr.shape[0],):
            raise ValueError(f"category_ids must have shape "
                             f"({arr.shape[0]},), got {cat_arr.shape}")
    detections = [boxsim.Detection(boxsim.CBox(*row), float(s), int(cid))
                  for row, s, cid in zip(arr, score_arr, cat_arr)]
    bound = _bound_metric(metric, m=m, n=n, mode=mode, scale=scale, c=c,
                          beta=beta)
    kept = boxsim.greedy_suppress(detections, bound, threshold,
                                  class_aware=class_aware)
    return np.asarray(kept, dtype=np.int64)
