#!/usr/bin/env python3
"""Threshold-plus-fallback label assignment, IoU vs calibrated simd.

Assigns anchors to ground truths on a synthetic tiny-object set with
both metrics at the standard (0.7, 0.3, 0.3) thresholds, then breaks
the results down by object size bucket.  Under IoU almost every tiny
ground truth fails the 0.7 bar and survives only through the one-anchor
fallback; under calibrated simd each one attracts a whole neighborhood
of positive anchors.
"""

from boxsim import (DEFAULT_SPEC, SizeBucket, Thresholds, assign, cached_grid,
                    calibrate, make_metric, match_stats, merge_bucket_stats,
                    synth_dataset)


def bucket_table(dataset, metric, thresholds):
    totals = {}
    for img in dataset.images:
        grid = cached_grid(DEFAULT_SPEC, (img.width, img.height))
        result = assign(metric.matrix(img.gt_boxes(), grid.anchors),
                        thresholds)
        totals = merge_bucket_stats(totals, match_stats(result, img.gts))
    return totals


def main() -> None:
    dataset = synth_dataset(count=30, image_size=(256, 256),
                            scale_range=(3.0, 12.0), objects_per_image=8,
                            rng_seed=5)
    thresholds = Thresholds(pos=0.7, neg=0.3, min_pos=0.3)
    params = calibrate(dataset, DEFAULT_SPEC)
    print(f"{dataset.num_gts} ground truths; simd calibrated to "
          f"m={params.m:.3f} n={params.n:.3f}\n")

    for metric in (make_metric("iou"),
                   make_metric("simd", norm_params=params)):
        totals = bucket_table(dataset, metric, thresholds)
        print(f"{metric.name} at thresholds (0.7, 0.3, 0.3):")
        print(f"  {'bucket':<12} {'gts':>5} {'mean pos':>9} "
              f"{'no threshold pos':>17} {'unmatched':>10}")
        for bucket in SizeBucket:
            stats = totals.get(bucket)
            if stats is None or stats.gt_count == 0:
                continue
            print(f"  {bucket.value:<12} {stats.gt_count:>5} "
                  f"{stats.mean_positives:>9.2f} "
                  f"{stats.threshold_unmatched_fraction:>17.2%} "
                  f"{stats.unmatched_fraction:>10.2%}")
        print()

    print("'no threshold pos' counts ground truths rescued only by the")
    print("fallback; 'unmatched' counts those that got nothing at all.")


if __name__ == "__main__":
    main()
