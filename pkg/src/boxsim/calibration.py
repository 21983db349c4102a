"""Dataset-adaptive calibration of the simd normalization parameters.

The x parameter m is the mean, over every (ground truth, anchor) pair
of every image, of |cx_gt - cx_anchor| / (w_gt + w_anchor); n is the
same with y and heights.  Accumulation is streaming and deterministic:
per-image partial sums are computed with a fixed pair ordering
(gt-major, anchor-minor) and merged in ascending image-id order with
Kahan compensation, so the result is bit-identical no matter how many
worker threads computed the per-image partials.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .anchors import AnchorSpec, cached_grid
from .datasets import (AnnotationSet, DatasetError, DatasetFormatError,
                       DatasetReadError)
from .geometry import EPS_NORM, BoxesLike, NormParams, as_box_array

__all__ = [
    "ZeroPairsError",
    "CalibrationAccumulator",
    "accumulate_image",
    "finalize",
    "calibrate",
    "save_norm_params",
    "load_norm_params",
]


class ZeroPairsError(DatasetError):
    """Calibration saw no (ground truth, anchor) pairs."""


@dataclass(frozen=True, slots=True)
class CalibrationAccumulator:
    """Streaming sums of per-axis offset ratios, with Kahan carry."""

    sum_x_ratio: float = 0.0
    sum_y_ratio: float = 0.0
    pair_count: int = 0
    comp_x: float = 0.0
    comp_y: float = 0.0


def _kahan_add(total: float, comp: float, value: float) -> tuple[float, float]:
    y = value - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def _ratio_sums(g: np.ndarray, a: np.ndarray) -> tuple[float, float, int]:
    """Partial sums over all pairs of one image, fixed row-major order."""
    gx = g[:, 0][:, None]
    gy = g[:, 1][:, None]
    gw = g[:, 2][:, None]
    gh = g[:, 3][:, None]
    ax = a[:, 0][None, :]
    ay = a[:, 1][None, :]
    aw = a[:, 2][None, :]
    ah = a[:, 3][None, :]
    rx = np.abs(gx - ax) / (gw + aw)
    ry = np.abs(gy - ay) / (gh + ah)
    return float(np.sum(rx)), float(np.sum(ry)), rx.size


def accumulate_image(gts: BoxesLike, anchors: BoxesLike,
                     acc: CalibrationAccumulator) -> CalibrationAccumulator:
    """Fold one image's pairs into the accumulator (pure; returns a new one).

    Either side may be empty, in which case the accumulator is returned
    unchanged.
    """
    g = as_box_array(gts)
    a = as_box_array(anchors)
    if g.shape[0] == 0 or a.shape[0] == 0:
        return acc
    sx, sy, count = _ratio_sums(g, a)
    total_x, comp_x = _kahan_add(acc.sum_x_ratio, acc.comp_x, sx)
    total_y, comp_y = _kahan_add(acc.sum_y_ratio, acc.comp_y, sy)
    return CalibrationAccumulator(sum_x_ratio=total_x, sum_y_ratio=total_y,
                                  pair_count=acc.pair_count + count,
                                  comp_x=comp_x, comp_y=comp_y)


def finalize(acc: CalibrationAccumulator,
             source_tag: str = "accumulated") -> NormParams:
    """Turn accumulated sums into NormParams (means floored at EPS_NORM)."""
    if acc.pair_count == 0:
        raise ZeroPairsError("calibration saw no (ground truth, anchor) pairs")
    m = max(acc.sum_x_ratio / acc.pair_count, EPS_NORM)
    n = max(acc.sum_y_ratio / acc.pair_count, EPS_NORM)
    return NormParams(m=m, n=n, pair_count=acc.pair_count, source_tag=source_tag)


def _select_levels(grid_anchors: np.ndarray, grid, levels) -> np.ndarray:
    if levels is None:
        return grid_anchors
    return np.concatenate([grid_anchors[grid.level_slice(i)] for i in levels],
                          axis=0)


def calibrate(dataset: AnnotationSet, spec: AnchorSpec, *,
              levels: Sequence[int] | None = None,
              subsample: float | None = None, seed: int = 0,
              workers: int = 1, source_tag: str | None = None) -> NormParams:
    """Calibrate NormParams over a dataset against an anchor layout.

    Args:
        dataset: annotated images; images without ground truths are skipped.
        spec: anchor layout evaluated at each image's size.
        levels: optional pyramid level indices to restrict anchors to.
        subsample: optional anchor sampling rate in (0, 1]; anchors are
            drawn per image with a seed derived from (seed, image id),
            so the result does not depend on worker count or image
            order.  At least one anchor is always kept.
        seed: base seed for subsampling.
        workers: thread count for the per-image partial sums.  The
            merge order is fixed (ascending image id), so the result is
            bit-identical for any worker count.
        source_tag: provenance string; autogenerated when omitted.
    """
    if levels is not None:
        levels = sorted(set(int(i) for i in levels))
        for i in levels:
            if not 0 <= i < len(spec.levels):
                raise ValueError(f"level index {i} out of range for "
                                 f"{len(spec.levels)} levels")
        if not levels:
            raise ValueError("levels must be non-empty when given")
    if subsample is not None and not 0.0 < subsample <= 1.0:
        raise ValueError(f"subsample rate must lie in (0, 1], got {subsample}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    images = sorted(dataset.images, key=lambda img: img.id)

    def partials(img) -> tuple[float, float, int]:
        if not img.gts:
            return 0.0, 0.0, 0
        grid = cached_grid(spec, (img.width, img.height))
        anchors = _select_levels(grid.anchors, grid, levels)
        if subsample is not None and subsample < 1.0:
            rng = np.random.default_rng(
                (seed & 0xFFFFFFFFFFFFFFFF, img.id & 0xFFFFFFFFFFFFFFFF))
            q = anchors.shape[0]
            k = max(1, int(round(subsample * q)))
            idx = rng.choice(q, size=k, replace=False)
            idx.sort()
            anchors = anchors[idx]
        if anchors.shape[0] == 0:
            return 0.0, 0.0, 0
        return _ratio_sums(img.gt_boxes(), anchors)

    if workers == 1:
        results = [partials(img) for img in images]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(partials, images))

    sum_x, sum_y, comp_x, comp_y, pair_count = 0.0, 0.0, 0.0, 0.0, 0
    for sx, sy, count in results:
        if count == 0:
            continue
        sum_x, comp_x = _kahan_add(sum_x, comp_x, sx)
        sum_y, comp_y = _kahan_add(sum_y, comp_y, sy)
        pair_count += count
    acc = CalibrationAccumulator(sum_x_ratio=sum_x, sum_y_ratio=sum_y,
                                 pair_count=pair_count,
                                 comp_x=comp_x, comp_y=comp_y)

    if source_tag is None:
        parts = [f"calibrated:images={len(images)}"]
        if levels is not None:
            parts.append(f"levels={','.join(str(i) for i in levels)}")
        if subsample is not None:
            parts.append(f"subsample={subsample!r}")
            parts.append(f"seed={seed}")
        source_tag = ";".join(parts)
    return finalize(acc, source_tag=source_tag)


def save_norm_params(params: NormParams, path: str | Path) -> None:
    """Write NormParams as JSON (sorted keys, stable float text)."""
    doc = {"m": params.m, "n": params.n, "pair_count": params.pair_count,
           "source_tag": params.source_tag}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_norm_params(path: str | Path) -> NormParams:
    """Read NormParams JSON written by save_norm_params."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetReadError(f"cannot read params file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "m" not in doc or "n" not in doc:
        raise DatasetFormatError(f"{path}: expected an object with 'm' and 'n'")
    try:
        return NormParams(m=float(doc["m"]), n=float(doc["n"]),
                          pair_count=int(doc.get("pair_count", 0)),
                          source_tag=str(doc.get("source_tag", f"file:{path}")))
    except (TypeError, ValueError) as exc:
        raise DatasetFormatError(f"{path}: invalid params: {exc}") from exc
