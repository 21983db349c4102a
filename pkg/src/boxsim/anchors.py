"""Multi-level anchor grid generation.

Anchors are laid out per pyramid level on a regular stride grid, one
box per (row, col, scale, ratio) combination, in center form
(cx, cy, w, h).  Generation is pure and deterministic: the same spec
and image size always produce the same array.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["AnchorSpec", "AnchorGrid", "build_grid", "cached_grid", "DEFAULT_SPEC"]


@dataclass(frozen=True, slots=True)
class AnchorSpec:
    """Anchor layout: pyramid levels plus per-cell size combinations.

    Attributes:
        levels: (stride, base_size) per pyramid level, pixels.
        scales: multipliers applied to base_size.
        ratios: aspect ratios r; a cell box has w = base*scale/sqrt(r)
            and h = base*scale*sqrt(r), so r = h/w and area is
            preserved across ratios.
        center_offset: cell-relative center position in [0, 1];
            0.5 centers anchors on stride cells.
    """

    levels: tuple[tuple[float, float], ...]
    scales: tuple[float, ...] = (1.0,)
    ratios: tuple[float, ...] = (0.5, 1.0, 2.0)
    center_offset: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels",
                           tuple((float(s), float(b)) for s, b in self.levels))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "center_offset", float(self.center_offset))
        if not self.levels or not self.scales or not self.ratios:
            raise ValueError("levels, scales, and ratios must be non-empty")
        for stride, base in self.levels:
            if stride <= 0 or base <= 0:
                raise ValueError(f"strides and base sizes must be positive, "
                                 f"got ({stride}, {base})")
        if any(s <= 0 for s in self.scales) or any(r <= 0 for r in self.ratios):
            raise ValueError("scales and ratios must be positive")
        if not 0.0 <= self.center_offset <= 1.0:
            raise ValueError(f"center_offset must lie in [0, 1], "
                             f"got {self.center_offset}")

    @property
    def boxes_per_cell(self) -> int:
        return len(self.scales) * len(self.ratios)

    @classmethod
    def from_dict(cls, d: dict) -> "AnchorSpec":
        """Build from a config mapping (lists are converted to tuples)."""
        kwargs = {}
        if "levels" in d:
            kwargs["levels"] = tuple((s, b) for s, b in d["levels"])
        if "scales" in d:
            kwargs["scales"] = tuple(d["scales"])
        if "ratios" in d:
            kwargs["ratios"] = tuple(d["ratios"])
        if "center_offset" in d:
            kwargs["center_offset"] = d["center_offset"]
        unknown = set(d) - {"levels", "scales", "ratios", "center_offset"}
        if unknown:
            raise ValueError(f"unknown anchor spec keys: {sorted(unknown)}")
        if "levels" not in kwargs:
            kwargs["levels"] = DEFAULT_SPEC.levels
        return cls(**kwargs)


# Default layout: one anchor size family per stride, base = stride.
DEFAULT_SPEC = AnchorSpec(levels=((4.0, 4.0), (8.0, 8.0), (16.0, 16.0),
                                  (32.0, 32.0), (64.0, 64.0)))


@dataclass(frozen=True)
class AnchorGrid:
    """All anchors for one image size, level-major ordering.

    Within a level the order is row (y), then column (x), then scale,
    then ratio.  ``anchors`` has shape (N, 4) and is read-only.
    """

    anchors: np.ndarray
    per_level_counts: tuple[int, ...]
    image_size: tuple[float, float] = field(default=(0.0, 0.0))

    def __post_init__(self) -> None:
        if self.anchors.ndim != 2 or self.anchors.shape[1] != 4:
            raise ValueError(f"anchors must have shape (N, 4), "
                             f"got {self.anchors.shape}")
        if sum(self.per_level_counts) != self.anchors.shape[0]:
            raise ValueError("per_level_counts do not sum to the anchor count")

    def __len__(self) -> int:
        return self.anchors.shape[0]

    def level_slice(self, index: int) -> slice:
        """Row slice of ``anchors`` covering pyramid level ``index``."""
        start = sum(self.per_level_counts[:index])
        return slice(start, start + self.per_level_counts[index])


def build_grid(spec: AnchorSpec, image_size: tuple[float, float]) -> AnchorGrid:
    """Generate the full anchor set for an image.

    Each level covers ceil(W/stride) x ceil(H/stride) cells, so anchors
    near the right/bottom edge may extend past the image; no clipping
    is applied.
    """
    width, height = float(image_size[0]), float(image_size[1])
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {image_size}")

    sqrt_r = np.sqrt(np.asarray(spec.ratios, dtype=np.float64))
    blocks: list[np.ndarray] = []
    counts: list[int] = []
    for stride, base in spec.levels:
        nx = math.ceil(width / stride)
        ny = math.ceil(height / stride)
        # Size combos in scale-major, ratio-minor order.
        ws = np.concatenate([(base * s) / sqrt_r for s in spec.scales])
        hs = np.concatenate([(base * s) * sqrt_r for s in spec.scales])
        k = ws.shape[0]
        xs = (np.arange(nx, dtype=np.float64) + spec.center_offset) * stride
        ys = (np.arange(ny, dtype=np.float64) + spec.center_offset) * stride
        shape = (ny, nx, k)
        level = np.stack([
            np.broadcast_to(xs[None, :, None], shape),
            np.broadcast_to(ys[:, None, None], shape),
            np.broadcast_to(ws[None, None, :], shape),
            np.broadcast_to(hs[None, None, :], shape),
        ], axis=-1).reshape(-1, 4)
        blocks.append(level)
        counts.append(level.shape[0])

    anchors = np.concatenate(blocks, axis=0)
    anchors.flags.writeable = False
    return AnchorGrid(anchors=anchors, per_level_counts=tuple(counts),
                      image_size=(width, height))


@functools.lru_cache(maxsize=64)
def cached_grid(spec: AnchorSpec, image_size: tuple[float, float]) -> AnchorGrid:
    """Memoized build_grid for repeated image sizes; result is shared
    and must not be mutated (the array is marked read-only)."""
    return build_grid(spec, image_size)
