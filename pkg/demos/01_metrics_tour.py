#!/usr/bin/env python3
"""Tour of the five pairwise box metrics.

Walks one ground-truth box through a few perturbations and prints how
each metric scores the pair.  The punchline is the tiny-box row: shift
a 4 px box by 2 px and IoU collapses to near zero, while the
similarity-style metrics (simd, dotd, nwd, rfd) degrade gracefully.
"""

from boxsim import CBox, NormParams, make_metric

# Bind each metric once.  simd uses hand-set normalization here; demo
# 03 shows how to fit m and n to a dataset instead.
METRICS = [
    make_metric("iou"),
    make_metric("simd", norm_params=NormParams(m=0.3, n=0.3)),
    make_metric("dotd", scale=12.0),
    make_metric("nwd"),
    make_metric("rfd"),
]


def show(title: str, gt: CBox, anchor: CBox) -> None:
    scores = "  ".join(f"{m.name}={m.pair(gt, anchor):6.4f}" for m in METRICS)
    print(f"{title:<34} {scores}")


def main() -> None:
    print(f"{'pair':<34} " + "  ".join(f"{m.name:>11}" for m in METRICS))

    medium = CBox(100, 100, 32, 32)
    show("32px box, identical", medium, medium)
    show("32px box, shifted 2px", medium, CBox(102, 100, 32, 32))
    show("32px box, half the width", medium, CBox(100, 100, 16, 32))

    tiny = CBox(100, 100, 4, 4)
    show("4px box, identical", tiny, tiny)
    show("4px box, shifted 2px", tiny, CBox(102, 100, 4, 4))
    show("4px box, shifted 4px (disjoint)", tiny, CBox(104, 100, 4, 4))

    print()
    print("The same 2px shift costs a 32px box almost nothing under IoU")
    print("but wipes out a 4px box; the exponential-family metrics keep a")
    print("usable gradient of similarity in exactly that regime.")


if __name__ == "__main__":
    main()
