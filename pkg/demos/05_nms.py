#!/usr/bin/env python3
"""Metric-parameterized non-maximum suppression.

Builds a cluster of overlapping tiny detections plus one isolated box
and runs the same greedy keeper loop under two different similarity
metrics.  IoU barely registers overlap between tiny boxes, so at the
usual 0.5 cut it keeps every near-duplicate; simd with a
dataset-calibrated normalization (demo 03 fits m and n around 8 on a
tiny-object set) treats the cluster as one object.
"""

from boxsim import CBox, Detection, NormParams, greedy_suppress, make_metric


def main() -> None:
    detections = [
        Detection(CBox(50.0, 50.0, 5.0, 5.0), 0.95),   # cluster around (50, 50)
        Detection(CBox(52.5, 50.0, 5.0, 5.0), 0.90),
        Detection(CBox(50.0, 52.5, 5.0, 5.0), 0.85),
        Detection(CBox(53.0, 53.0, 5.0, 5.0), 0.80),
        Detection(CBox(120.0, 120.0, 5.0, 5.0), 0.75),  # isolated
    ]
    print("detections (tiny 5px boxes):")
    for i, det in enumerate(detections):
        print(f"  [{i}] center=({det.box.cx:5.1f}, {det.box.cy:5.1f}) "
              f"score={det.score:.2f}")

    iou = make_metric("iou")
    simd = make_metric("simd", norm_params=NormParams(m=8.0, n=8.0))

    for metric in (iou, simd):
        print(f"\npairwise {metric.name} against the top scorer [0]:")
        for j in range(1, len(detections)):
            print(f"  [0] vs [{j}]: {metric.pair(detections[0].box, detections[j].box):.3f}")
        kept = greedy_suppress(detections, metric, 0.5)
        print(f"{metric.name} @ 0.5 keeps {kept}")

    print("\nThe 2.5px-offset twins overlap by only a third of their area,")
    print("so IoU at 0.5 keeps all five boxes; calibrated simd scores the")
    print("cluster near 1.0 and keeps just the top scorer plus the far box.")


if __name__ == "__main__":
    main()
