"""Similarity metrics for axis-aligned bounding boxes in center form.

All boxes are (cx, cy, w, h) in pixels with strictly positive sizes.
The module provides one scalar and one batch (pairwise-matrix) entry
point per metric.  Scalar calls delegate to the same vectorized kernel
on 1x1 arrays, so a scalar result is always bit-identical to the
corresponding matrix cell.

Metrics
-------
simd
    exp(-(location + shape)) where both terms are Euclidean norms of
    center offsets / size differences, each axis divided by the summed
    box extent on that axis times a dataset-calibrated normalization
    parameter (``NormParams``).  Calibration makes the score scale
    adapt to the size statistics of the dataset instead of assuming
    a fixed overlap regime.
iou
    Standard intersection over union.
dotd
    exp(-D/S): center distance D relative to a dataset scale S
    (typically the square root of the mean ground-truth area).
nwd
    exp(-W/C): a Wasserstein-style distance between boxes modeled as
    Gaussians, W = sqrt(dx^2 + dy^2 + (dw^2 + dh^2)/4), divided by a
    constant C.
rfd
    1/(1 + RFDC) where RFDC is a KL-style divergence between Gaussian
    box models with an aspect scaling factor beta, clamped at 0 so the
    score never exceeds 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "EPS_NORM",
    "CBox",
    "NormMode",
    "NormParams",
    "MetricMatrix",
    "PairwiseMetric",
    "as_box_array",
    "simd_components",
    "simd_pair",
    "simd_matrix",
    "iou",
    "iou_matrix",
    "dotd",
    "dotd_matrix",
    "nwd",
    "nwd_matrix",
    "rfd",
    "rfd_matrix",
    "make_metric",
    "METRIC_NAMES",
]

# Floor for calibrated normalization parameters; keeps denominators
# away from zero on degenerate datasets.
EPS_NORM = 1e-4


@dataclass(frozen=True, slots=True)
class CBox:
    """Axis-aligned box: center (cx, cy), size (w, h), pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(np.isfinite((self.cx, self.cy, self.w, self.h))):
            raise ValueError(f"non-finite box field: {self!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sizes must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_topleft(cls, x: float, y: float, w: float, h: float) -> "CBox":
        """Build from top-left corner form (x, y, w, h)."""
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> tuple[float, float, float, float]:
        """Return (x1, y1, x2, y2)."""
        hw = self.w * 0.5
        hh = self.h * 0.5
        return (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)

    def to_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


class NormMode(enum.Enum):
    """Which axes of the similarity kernel use calibrated normalization.

    A disabled axis substitutes 1.0 for its parameter, so NONE reduces
    the kernel to plain size-relative offsets.
    """

    BOTH = "both"
    WIDTH_ONLY = "width"
    HEIGHT_ONLY = "height"
    NONE = "none"

    @property
    def normalizes_width(self) -> bool:
        return self in (NormMode.BOTH, NormMode.WIDTH_ONLY)

    @property
    def normalizes_height(self) -> bool:
        return self in (NormMode.BOTH, NormMode.HEIGHT_ONLY)

    @classmethod
    def from_name(cls, name: str) -> "NormMode":
        for mode in cls:
            if mode.value == name:
                return mode
        raise ValueError(f"unknown norm mode {name!r}; expected one of "
                         f"{[m.value for m in cls]}")


@dataclass(frozen=True, slots=True)
class NormParams:
    """Calibrated normalization parameters for the simd kernel.

    ``m`` scales the x/width axis, ``n`` the y/height axis.  Both are
    floored at EPS_NORM.  ``pair_count`` records how many gt/anchor
    pairs produced the estimate and ``source_tag`` a short provenance
    string (e.g. "manual" or a calibration descriptor).
    """

    m: float
    n: float
    pair_count: int = 0
    source_tag: str = "manual"

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "n", float(self.n))
        object.__setattr__(self, "pair_count", int(self.pair_count))
        if not (np.isfinite(self.m) and np.isfinite(self.n)):
            raise ValueError(f"non-finite normalization parameters: {self!r}")
        if self.m < EPS_NORM or self.n < EPS_NORM:
            raise ValueError(
                f"normalization parameters must be >= {EPS_NORM}, got "
                f"m={self.m}, n={self.n}")
        if self.pair_count < 0:
            raise ValueError(f"pair_count must be >= 0, got {self.pair_count}")


BoxesLike = Union[np.ndarray, Sequence[CBox], Sequence[Sequence[float]]]


def as_box_array(boxes: BoxesLike) -> np.ndarray:
    """Coerce boxes to a C-contiguous float64 array of shape (N, 4).

    Accepts an (N, 4) ndarray, a sequence of CBox, or a sequence of
    4-element sequences.  Validates finiteness and positive sizes.
    """
    if isinstance(boxes, np.ndarray):
        arr = np.ascontiguousarray(boxes, dtype=np.float64)
    else:
        rows = [b.to_array() if isinstance(b, CBox) else np.asarray(b, dtype=np.float64)
                for b in boxes]
        if rows:
            arr = np.array(rows, dtype=np.float64).reshape(len(rows), -1)
        else:
            arr = np.empty((0, 4), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(f"expected boxes of shape (N, 4), got {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("boxes contain non-finite values")
    if arr.size and not (arr[:, 2:] > 0).all():
        raise ValueError("box sizes must be strictly positive")
    return arr


@dataclass(frozen=True)
class MetricMatrix:
    """Pairwise scores, rows = ground truths, cols = anchors, in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise ValueError("MetricMatrix requires a 2-D ndarray")
        if v.size and not ((v >= 0.0) & (v <= 1.0)).all():
            raise ValueError("metric values must lie in [0, 1]")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def _columns(g: np.ndarray, a: np.ndarray):
    """Split box arrays into broadcastable (N,1) / (1,Q) column views."""
    gx = g[:, 0][:, None]
    gy = g[:, 1][:, None]
    gw = g[:, 2][:, None]
    gh = g[:, 3][:, None]
    ax = a[:, 0][None, :]
    ay = a[:, 1][None, :]
    aw = a[:, 2][None, :]
    ah = a[:, 3][None, :]
    return gx, gy, gw, gh, ax, ay, aw, ah


def _require_nonempty(g: np.ndarray, a: np.ndarray, op: str) -> None:
    if g.shape[0] == 0 or a.shape[0] == 0:
        raise ValueError(f"{op} requires non-empty box sets, got "
                         f"{g.shape[0]} x {a.shape[0]}")


# ---------------------------------------------------------------------------
# simd


def _simd_terms(g: np.ndarray, a: np.ndarray, params: NormParams,
                mode: NormMode) -> tuple[np.ndarray, np.ndarray]:
    """Location and shape distance terms for all (gt, anchor) pairs.

    Fixed evaluation order; scalar entry points reuse this kernel on
    1x1 arrays so results match the matrix path bit for bit.
    """
    m_eff = params.m if mode.normalizes_width else 1.0
    n_eff = params.n if mode.normalizes_height else 1.0
    gx, gy, gw, gh, ax, ay, aw, ah = _columns(g, a)
    den_x = m_eff * (gw + aw)
    den_y = n_eff * (gh + ah)
    tx = (gx - ax) / den_x
    ty = (gy - ay) / den_y
    tw = (gw - aw) / den_x
    th = (gh - ah) / den_y
    loc = np.sqrt(tx * tx + ty * ty)
    shape = np.sqrt(tw * tw + th * th)
    return loc, shape


def simd_components(gt: CBox, anchor: CBox, params: NormParams,
                    mode: NormMode = NormMode.BOTH) -> tuple[float, float]:
    """Return (location_term, shape_term) for one gt/anchor pair."""
    loc, shape = _simd_terms(gt.to_array()[None, :], anchor.to_array()[None, :],
                             params, mode)
    out = (float(loc[0, 0]), float(shape[0, 0]))
    if not all(np.isfinite(out)):
        raise ValueError(f"non-finite similarity terms for {gt} vs {anchor}")
    return out


def simd_pair(gt: CBox, anchor: CBox, params: NormParams,
              mode: NormMode = NormMode.BOTH) -> float:
    """Similarity exp(-(location + shape)) for one pair, in (0, 1].

    Identical boxes score exactly 1.0.  For extremely distant boxes the
    exponential can underflow to 0.0 in float64.
    """
    loc, shape = _simd_terms(gt.to_array()[None, :], anchor.to_array()[None, :],
                             params, mode)
    expo = loc + shape
    if not np.isfinite(expo[0, 0]):
        raise ValueError(f"non-finite similarity exponent for {gt} vs {anchor}")
    return float(np.exp(-expo)[0, 0])


def simd_matrix(gts: BoxesLike, anchors: BoxesLike, params: NormParams,
                mode: NormMode = NormMode.BOTH) -> MetricMatrix:
    """Pairwise simd scores, shape (len(gts), len(anchors))."""
    g = as_box_array(gts)
    a = as_box_array(anchors)
    _require_nonempty(g, a, "simd_matrix")
    loc, shape = _simd_terms(g, a, params, mode)
    expo = loc + shape
    if not np.isfinite(expo).all():
        raise ValueError("non-finite similarity exponent in simd_matrix")
    return MetricMatrix(np.exp(-expo))


# ---------------------------------------------------------------------------
# iou


def _iou_values(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    gx, gy, gw, gh, ax, ay, aw, ah = _columns(g, a)
    ghw = gw * 0.5
    ghh = gh * 0.5
    ahw = aw * 0.5
    ahh = ah * 0.5
    gx1 = gx - ghw
    gy1 = gy - ghh
    gx2 = gx + ghw
    gy2 = gy + ghh
    ax1 = ax - ahw
    ay1 = ay - ahh
    ax2 = ax + ahw
    ay2 = ay + ahh
    iw = np.maximum(np.minimum(gx2, ax2) - np.maximum(gx1, ax1), 0.0)
    ih = np.maximum(np.minimum(gy2, ay2) - np.maximum(gy1, ay1), 0.0)
    inter = iw * ih
    # Areas from the same corner values as the intersection, so an
    # identical pair yields inter == area exactly and a score of 1.0.
    area_g = (gx2 - gx1) * (gy2 - gy1)
    area_a = (ax2 - ax1) * (ay2 - ay1)
    union = np.maximum((area_g + area_a) - inter, inter)
    out = np.zeros(np.broadcast_shapes(inter.shape, union.shape), dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def iou(a: CBox, b: CBox) -> float:
    """Intersection over union in [0, 1]; 1.0 exactly iff identical."""
    return float(_iou_values(a.to_array()[None, :], b.to_array()[None, :])[0, 0])


def iou_matrix(gts: BoxesLike, anchors: BoxesLike) -> MetricMatrix:
    g = as_box_array(gts)
    a = as_box_array(anchors)
    _require_nonempty(g, a, "iou_matrix")
    return MetricMatrix(_iou_values(g, a))


# ---------------------------------------------------------------------------
# dotd


def _dotd_values(g: np.ndarray, a: np.ndarray, scale: float) -> np.ndarray:
    gx, gy, _, _, ax, ay, _, _ = _columns(g, a)
    dx = gx - ax
    dy = gy - ay
    dist = np.sqrt(dx * dx + dy * dy)
    return np.exp(-(dist / scale))


def _check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def dotd(gt: CBox, anchor: CBox, scale: float) -> float:
    """exp(-D/scale) where D is the center distance in pixels."""
    scale = _check_positive(scale, "scale")
    return float(_dotd_values(gt.to_array()[None, :], anchor.to_array()[None, :],
                              scale)[0, 0])


def dotd_matrix(gts: BoxesLike, anchors: BoxesLike, scale: float) -> MetricMatrix:
    scale = _check_positive(scale, "scale")
    g = as_box_array(gts)
    a = as_box_array(anchors)
    _require_nonempty(g, a, "dotd_matrix")
    return MetricMatrix(_dotd_values(g, a, scale))


# ---------------------------------------------------------------------------
# nwd


def _nwd_values(g: np.ndarray, a: np.ndarray, c: float) -> np.ndarray:
    gx, gy, gw, gh, ax, ay, aw, ah = _columns(g, a)
    dx = gx - ax
    dy = gy - ay
    dw = gw - aw
    dh = gh - ah
    dist = np.sqrt((dx * dx + dy * dy) + (dw * dw + dh * dh) * 0.25)
    return np.exp(-(dist / c))


def nwd(gt: CBox, anchor: CBox, c: float) -> float:
    """exp(-W/c): Gaussian-model distance over centers and half-sizes."""
    c = _check_positive(c, "c")
    return float(_nwd_values(gt.to_array()[None, :], anchor.to_array()[None, :],
                             c)[0, 0])


def nwd_matrix(gts: BoxesLike, anchors: BoxesLike, c: float) -> MetricMatrix:
    c = _check_positive(c, "c")
    g = as_box_array(gts)
    a = as_box_array(anchors)
    _require_nonempty(g, a, "nwd_matrix")
    return MetricMatrix(_nwd_values(g, a, c))


# ---------------------------------------------------------------------------
# rfd


def _rfd_values(g: np.ndarray, a: np.ndarray, beta: float) -> np.ndarray:
    gx, gy, gw, gh, ax, ay, aw, ah = _columns(g, a)
    half_beta = 0.5 * beta
    r_w = half_beta * ((aw * aw) / (gw * gw))
    r_h = half_beta * ((ah * ah) / (gh * gh))
    tx = ax - gx
    ty = ay - gy
    r_x = 2.0 * (tx * tx) / (gw * gw)
    r_y = 2.0 * (ty * ty) / (gh * gh)
    r_lw = np.log(gw / (beta * aw))
    r_lh = np.log(gh / (beta * ah))
    div = r_w + r_h + r_x + r_y + r_lw + r_lh - 1.0
    # The raw divergence can go negative when beta != 1; clamp so the
    # score stays within (0, 1].
    div = np.maximum(div, 0.0)
    return 1.0 / (1.0 + div)


def rfd(gt: CBox, anchor: CBox, beta: float = 1.0) -> float:
    """1/(1 + divergence) between Gaussian box models, in (0, 1]."""
    beta = _check_positive(beta, "beta")
    return float(_rfd_values(gt.to_array()[None, :], anchor.to_array()[None, :],
                             beta)[0, 0])


def rfd_matrix(gts: BoxesLike, anchors: BoxesLike, beta: float = 1.0) -> MetricMatrix:
    beta = _check_positive(beta, "beta")
    g = as_box_array(gts)
    a = as_box_array(anchors)
    _require_nonempty(g, a, "rfd_matrix")
    return MetricMatrix(_rfd_values(g, a, beta))


# ---------------------------------------------------------------------------
# metric factory

METRIC_NAMES = ("iou", "simd", "dotd", "nwd", "rfd")


@dataclass(frozen=True)
class PairwiseMetric:
    """A named metric bound to its parameters.

    ``matrix`` evaluates all pairs, ``pair`` one pair (via a 1x1
    matrix, so scalar and batch results are bit-identical).
    """

    name: str
    _matrix_fn: Callable[[BoxesLike, BoxesLike], MetricMatrix]

    def matrix(self, gts: BoxesLike, anchors: BoxesLike) -> MetricMatrix:
        return self._matrix_fn(gts, anchors)

    def pair(self, a: CBox, b: CBox) -> float:
        return float(self._matrix_fn([a], [b]).values[0, 0])


def make_metric(name: str, *, norm_params: NormParams | None = None,
                norm_mode: NormMode = NormMode.BOTH,
                scale: float | None = None, c: float = 12.8,
                beta: float = 1.0) -> PairwiseMetric:
    """Bind a metric name to its parameters.

    Args:
        name: one of METRIC_NAMES.
        norm_params: required for "simd".
        norm_mode: normalization mode for "simd".
        scale: required for "dotd" (dataset scale S in pixels).
        c: normalizer for "nwd" (default 12.8 px, a conventional
            tiny-object dataset mean edge length).
        beta: aspect scaling for "rfd".
    """
    key = name.lower()
    if key == "iou":
        return PairwiseMetric("iou", iou_matrix)
    if key == "simd":
        if norm_params is None:
            raise ValueError("simd requires norm_params")
        return PairwiseMetric(
            "simd", lambda g, a: simd_matrix(g, a, norm_params, norm_mode))
    if key == "dotd":
        if scale is None:
            raise ValueError("dotd requires a dataset scale")
        s = _check_positive(scale, "scale")
        return PairwiseMetric("dotd", lambda g, a: dotd_matrix(g, a, s))
    if key == "nwd":
        cc = _check_positive(c, "c")
        return PairwiseMetric("nwd", lambda g, a: nwd_matrix(g, a, cc))
    if key == "rfd":
        b = _check_positive(beta, "beta")
        return PairwiseMetric("rfd", lambda g, a: rfd_matrix(g, a, b))
    raise ValueError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")
