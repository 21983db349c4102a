"""Shared test helpers."""

from __future__ import annotations

import numpy as np

from boxsim import CBox


def random_boxes(rng: np.random.Generator, n: int, center_span: float = 256.0,
                 size_lo: float = 1.0, size_hi: float = 64.0) -> list[CBox]:
    """Seeded random center-form boxes with bounded coordinates.

    Bounds keep every metric exponent far from float underflow so the
    documented (0, 1] range holds throughout the suite.
    """
    cx = rng.uniform(0.0, center_span, n)
    cy = rng.uniform(0.0, center_span, n)
    w = rng.uniform(size_lo, size_hi, n)
    h = rng.uniform(size_lo, size_hi, n)
    return [CBox(*fields) for fields in zip(cx, cy, w, h)]
