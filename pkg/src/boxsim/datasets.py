"""Annotation ingestion, size bucketing, and synthetic dataset generation.

Datasets use the COCO JSON layout (images / annotations / categories,
bbox in top-left [x, y, w, h] form); in memory every box is a center-form
CBox.  Ingestion is strict about structure (malformed files raise) but
lenient about geometry: degenerate sizes are clamped and out-of-bounds
boxes are counted and warned about, never dropped.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .geometry import CBox

__all__ = [
    "DatasetError",
    "DatasetReadError",
    "DatasetFormatError",
    "DanglingReferenceError",
    "EmptyDatasetError",
    "SizeBucket",
    "BUCKET_EDGES",
    "size_bucket",
    "GroundTruth",
    "Category",
    "ImageRecord",
    "IngestSummary",
    "AnnotationSet",
    "load_coco",
    "write_coco",
    "dotd_scale",
    "synth_dataset",
    "MIN_BOX_SIZE",
]

logger = logging.getLogger(__name__)

# Degenerate annotation sizes are clamped up to this many pixels.
MIN_BOX_SIZE = 1e-3
# Boxes may exceed image bounds by this margin before being counted
# as out of bounds.
BOUNDS_MARGIN = 1.0


class DatasetError(Exception):
    """Base class for dataset ingestion and preparation failures."""


class DatasetReadError(DatasetError):
    """The dataset file could not be read."""


class DatasetFormatError(DatasetError):
    """The dataset file is not structurally valid."""


class DanglingReferenceError(DatasetError):
    """An annotation references a missing image or category."""


class EmptyDatasetError(DatasetError):
    """An operation needs annotations but the dataset has none."""


class SizeBucket(enum.Enum):
    """Object size classes by sqrt(w*h), half-open pixel ranges."""

    BELOW_RANGE = "below_range"   # [0, 2)
    VERY_TINY = "very_tiny"       # [2, 8)
    TINY = "tiny"                 # [8, 16)
    SMALL = "small"               # [16, 32)
    MEDIUM = "medium"             # [32, 64)
    ABOVE_RANGE = "above_range"   # [64, inf)


BUCKET_EDGES = (2.0, 8.0, 16.0, 32.0, 64.0)

_BUCKET_ORDER = (SizeBucket.BELOW_RANGE, SizeBucket.VERY_TINY, SizeBucket.TINY,
                 SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.ABOVE_RANGE)


def size_bucket(box: CBox) -> SizeBucket:
    """Classify a box by sqrt(w*h) into half-open size ranges."""
    edge = math.sqrt(box.w * box.h)
    for bucket, upper in zip(_BUCKET_ORDER, BUCKET_EDGES):
        if edge < upper:
            return bucket
    return SizeBucket.ABOVE_RANGE


class GroundTruth(NamedTuple):
    box: CBox
    category_id: int


class Category(NamedTuple):
    id: int
    name: str


@dataclass(frozen=True, slots=True)
class ImageRecord:
    """One image: id, pixel size, and its ground-truth boxes."""

    id: int
    width: float
    height: float
    gts: tuple[GroundTruth, ...] = ()

    def gt_boxes(self) -> np.ndarray:
        """Ground-truth boxes as an (N, 4) center-form array."""
        if not self.gts:
            return np.zeros((0, 4), dtype=np.float64)
        return np.array([gt.box.to_array() for gt in self.gts], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class IngestSummary:
    """Counts of geometry repairs applied while loading."""

    clamped_boxes: int = 0
    out_of_bounds_boxes: int = 0


@dataclass(frozen=True, slots=True)
class AnnotationSet:
    """An immutable dataset: images (unique ids) plus categories."""

    images: tuple[ImageRecord, ...]
    categories: tuple[Category, ...]
    ingest: IngestSummary = field(default_factory=IngestSummary)

    def __post_init__(self) -> None:
        ids = [img.id for img in self.images]
        if len(set(ids)) != len(ids):
            raise ValueError("image ids must be unique")

    @property
    def num_gts(self) -> int:
        return sum(len(img.gts) for img in self.images)

    def iter_gts(self) -> Iterable[GroundTruth]:
        for img in self.images:
            yield from img.gts


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise DatasetFormatError(message)


def load_coco(path: str | Path) -> AnnotationSet:
    """Load a COCO-style JSON annotation file.

    Raises DatasetReadError if the file cannot be read,
    DatasetFormatError if the structure is malformed, and
    DanglingReferenceError if an annotation points at a missing image
    or category.  Zero or negative annotation sizes are clamped to
    MIN_BOX_SIZE and counted; boxes extending past the image bounds
    (beyond BOUNDS_MARGIN) are counted and warned about.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetReadError(f"cannot read dataset file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path} is not valid JSON: {exc}") from exc

    _require(isinstance(doc, dict), f"{path}: top level must be a JSON object")
    for key in ("images", "annotations", "categories"):
        _require(isinstance(doc.get(key), list), f"{path}: missing list {key!r}")

    categories: list[Category] = []
    for entry in doc["categories"]:
        _require(isinstance(entry, dict) and "id" in entry,
                 f"{path}: category entries need an 'id'")
        cid = int(entry["id"])
        categories.append(Category(cid, str(entry.get("name", f"category-{cid}"))))
    category_ids = {c.id for c in categories}
    _require(len(category_ids) == len(categories),
             f"{path}: category ids must be unique")

    image_meta: dict[int, tuple[float, float]] = {}
    image_order: list[int] = []
    for entry in doc["images"]:
        _require(isinstance(entry, dict) and {"id", "width", "height"} <= set(entry),
                 f"{path}: image entries need id, width, height")
        iid = int(entry["id"])
        _require(iid not in image_meta, f"{path}: duplicate image id {iid}")
        width = float(entry["width"])
        height = float(entry["height"])
        _require(width > 0 and height > 0,
                 f"{path}: image {iid} has non-positive size")
        image_meta[iid] = (width, height)
        image_order.append(iid)

    gts_by_image: dict[int, list[GroundTruth]] = {iid: [] for iid in image_order}
    clamped = 0
    out_of_bounds = 0
    for entry in doc["annotations"]:
        _require(isinstance(entry, dict)
                 and {"image_id", "category_id", "bbox"} <= set(entry),
                 f"{path}: annotation entries need image_id, category_id, bbox")
        iid = int(entry["image_id"])
        cid = int(entry["category_id"])
        if iid not in image_meta:
            raise DanglingReferenceError(
                f"{path}: annotation references missing image id {iid}")
        if cid not in category_ids:
            raise DanglingReferenceError(
                f"{path}: annotation references missing category id {cid}")
        bbox = entry["bbox"]
        _require(isinstance(bbox, (list, tuple)) and len(bbox) == 4,
                 f"{path}: bbox must be [x, y, w, h]")
        x, y, w, h = (float(v) for v in bbox)
        _require(all(math.isfinite(v) for v in (x, y, w, h)),
                 f"{path}: bbox has non-finite values: {bbox}")
        cx = x + w / 2.0
        cy = y + h / 2.0
        if w < MIN_BOX_SIZE or h < MIN_BOX_SIZE:
            clamped += 1
            w = max(w, MIN_BOX_SIZE)
            h = max(h, MIN_BOX_SIZE)
        img_w, img_h = image_meta[iid]
        if (cx - w / 2.0 < -BOUNDS_MARGIN or cy - h / 2.0 < -BOUNDS_MARGIN
                or cx + w / 2.0 > img_w + BOUNDS_MARGIN
                or cy + h / 2.0 > img_h + BOUNDS_MARGIN):
            out_of_bounds += 1
        gts_by_image[iid].append(GroundTruth(CBox(cx, cy, w, h), cid))

    if clamped:
        logger.warning("%s: clamped %d degenerate annotation sizes to %g px",
                       path, clamped, MIN_BOX_SIZE)
    if out_of_bounds:
        logger.warning("%s: %d annotations extend past their image bounds",
                       path, out_of_bounds)

    images = tuple(
        ImageRecord(id=iid, width=image_meta[iid][0], height=image_meta[iid][1],
                    gts=tuple(gts_by_image[iid]))
        for iid in image_order)
    return AnnotationSet(images=images, categories=tuple(categories),
                         ingest=IngestSummary(clamped, out_of_bounds))


def write_coco(dataset: AnnotationSet, path: str | Path) -> None:
    """Write a COCO-style JSON file (sorted keys, stable float text).

    Round-trips through load_coco with centers preserved to well under
    1e-6 px (one rounding of the corner conversion).
    """
    images = [{"id": img.id, "width": img.width, "height": img.height}
              for img in dataset.images]
    annotations = []
    ann_id = 1
    for img in dataset.images:
        for gt in img.gts:
            box = gt.box
            annotations.append({
                "id": ann_id,
                "image_id": img.id,
                "category_id": gt.category_id,
                "bbox": [box.cx - box.w / 2.0, box.cy - box.h / 2.0, box.w, box.h],
                "area": box.w * box.h,
                "iscrowd": 0,
            })
            ann_id += 1
    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": c.id, "name": c.name} for c in dataset.categories],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def dotd_scale(dataset: AnnotationSet) -> float:
    """sqrt of the mean ground-truth area over the whole dataset.

    Exact regardless of image or annotation ordering (areas are summed
    with math.fsum).  Raises EmptyDatasetError when there are no
    annotations.
    """
    areas = [gt.box.area for gt in dataset.iter_gts()]
    if not areas:
        raise EmptyDatasetError("dotd_scale needs at least one annotation")
    return math.sqrt(math.fsum(areas) / len(areas))


def synth_dataset(count: int, image_size: tuple[int, int] = (512, 512),
                  scale_range: tuple[float, float] = (4.0, 8.0),
                  objects_per_image: int = 10,
                  rng_seed: int = 0) -> AnnotationSet:
    """Generate a synthetic dataset of fully contained boxes.

    Each object draws an edge scale s in scale_range and an aspect
    ratio r in [0.5, 2], giving w = s/sqrt(r), h = s*sqrt(r), then a
    center uniform over positions keeping the box inside the image.
    Deterministic for a given seed (fixed draw order per image).
    """
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    if objects_per_image < 0:
        raise ValueError(f"objects_per_image must be >= 0, got {objects_per_image}")
    width, height = int(image_size[0]), int(image_size[1])
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {image_size}")
    lo, hi = float(scale_range[0]), float(scale_range[1])
    if not (0 < lo <= hi):
        raise ValueError(f"scale range must satisfy 0 < lo <= hi, got {scale_range}")
    # Worst case: ratio 2 makes the long edge hi*sqrt(2); it must fit.
    if hi * math.sqrt(2.0) > min(width, height):
        raise ValueError(
            f"scale range {scale_range} cannot guarantee containment in "
            f"{width}x{height} images (long edge up to {hi * math.sqrt(2.0):.1f})")

    rng = np.random.default_rng(rng_seed)
    images = []
    for i in range(count):
        k = objects_per_image
        s = rng.uniform(lo, hi, size=k)
        r = rng.uniform(0.5, 2.0, size=k)
        sqrt_r = np.sqrt(r)
        ws = s / sqrt_r
        hs = s * sqrt_r
        cxs = rng.uniform(ws / 2.0, width - ws / 2.0)
        cys = rng.uniform(hs / 2.0, height - hs / 2.0)
        gts = tuple(GroundTruth(CBox(cx, cy, w, h), 1)
                    for cx, cy, w, h in zip(cxs, cys, ws, hs))
        images.append(ImageRecord(id=i + 1, width=float(width),
                                  height=float(height), gts=gts))
    return AnnotationSet(images=tuple(images),
                         categories=(Category(1, "object"),))
