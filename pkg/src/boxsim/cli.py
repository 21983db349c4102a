"""Command-line interface.

Subcommands:
    calibrate     fit simd normalization parameters over a dataset
    assign-stats  per-size-bucket assignment quality for one metric
    compare       side-by-side assignment summaries for all metrics
    synth         generate a synthetic tiny-object dataset
    nms-demo      run greedy NMS over a detections file

Settings resolve as: command-line flags > --config JSON file > defaults.
Exit codes: 0 success, 2 configuration error, 3 data error.  All file
outputs are byte-deterministic for a fixed config and input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .anchors import AnchorSpec, DEFAULT_SPEC, cached_grid
from .assigner import BucketStats, Thresholds, assign, match_stats, merge_bucket_stats
from .calibration import calibrate, load_norm_params, save_norm_params
from .datasets import (AnnotationSet, DatasetError, SizeBucket, dotd_scale,
                       load_coco, size_bucket, synth_dataset, write_coco)
from .geometry import (METRIC_NAMES, CBox, NormMode, NormParams,
                       PairwiseMetric, make_metric)
from .nms import greedy_suppress, load_detections, save_detections

__all__ = ["ConfigError", "main", "DEFAULTS"]


class ConfigError(Exception):
    """Bad or missing configuration (exit code 2)."""


DEFAULTS: dict[str, Any] = {
    "dataset": None,
    "out": None,
    "metric": "simd",
    "pos": 0.7,
    "neg": 0.3,
    "min_pos": 0.3,
    "seed": 0,
    "norm_mode": "both",
    "nms_metric": "iou",
    "nms_thr": 0.5,
    "norm_params": None,      # path to a NormParams JSON file
    "norm_m": None,           # direct parameter override
    "norm_n": None,
    "anchors": None,          # AnchorSpec mapping, config file only
    "levels": None,           # pyramid level indices for calibration
    "subsample": None,        # anchor sampling rate for calibration
    "workers": 1,
    "dotd_scale": "auto",
    "nwd_c": 12.8,
    "rfd_beta": 1.0,
    "count": 20,              # synth: number of images
    "image_size": [512, 512],
    "scale_range": [4.0, 8.0],
    "objects_per_image": 10,
    "samples": 200,           # compare: sampled pairs in the CSV
    "detections": None,       # nms-demo input path
    "class_aware": False,
}

# Keys that hold filesystem paths; kept out of report headers so the
# same config produces byte-identical reports regardless of where the
# files live.
_PATH_KEYS = {"dataset", "out", "norm_params", "detections"}


def _load_config_file(path: str) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        cfg.update(_load_config_file(config_path))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if isinstance(cfg.get("levels"), str):
        try:
            cfg["levels"] = [int(part) for part in cfg["levels"].split(",") if part]
        except ValueError as exc:
            raise ConfigError(f"bad levels list: {cfg['levels']!r}") from exc
    return cfg


def _header(cfg: dict[str, Any], command: str) -> dict[str, Any]:
    settings = {k: v for k, v in sorted(cfg.items())
                if k not in _PATH_KEYS and v is not None}
    return {"tool": "boxsim", "version": __version__, "command": command,
            "settings": settings}


def _anchor_spec(cfg: dict[str, Any]) -> AnchorSpec:
    if cfg["anchors"] is None:
        return DEFAULT_SPEC
    try:
        return AnchorSpec.from_dict(cfg["anchors"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad anchor spec: {exc}") from exc


def _thresholds(cfg: dict[str, Any]) -> Thresholds:
    try:
        return Thresholds(pos=cfg["pos"], neg=cfg["neg"], min_pos=cfg["min_pos"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _norm_mode(cfg: dict[str, Any]) -> NormMode:
    try:
        return NormMode.from_name(cfg["norm_mode"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _require_out(cfg: dict[str, Any]) -> Path:
    if not cfg["out"]:
        raise ConfigError("an output directory is required (--out)")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(cfg: dict[str, Any]) -> AnnotationSet:
    if not cfg["dataset"]:
        raise ConfigError("a dataset file is required (--dataset)")
    return load_coco(cfg["dataset"])


def _resolve_norm_params(cfg: dict[str, Any],
                         dataset: AnnotationSet | None,
                         spec: AnchorSpec) -> NormParams:
    """Explicit file beats direct m/n values beats on-the-fly calibration."""
    if cfg["norm_params"]:
        return load_norm_params(cfg["norm_params"])
    if cfg["norm_m"] is not None or cfg["norm_n"] is not None:
        if cfg["norm_m"] is None or cfg["norm_n"] is None:
            raise ConfigError("norm_m and norm_n must be given together")
        try:
            return NormParams(m=cfg["norm_m"], n=cfg["norm_n"],
                              source_tag="cli")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if dataset is not None:
        return calibrate(dataset, spec, levels=cfg["levels"],
                         subsample=cfg["subsample"], seed=cfg["seed"],
                         workers=cfg["workers"])
    raise ConfigError("simd needs --norm-params or --norm-m/--norm-n "
                      "when no dataset is available")


def _resolve_dotd_scale(cfg: dict[str, Any],
                        dataset: AnnotationSet | None) -> float:
    value = cfg["dotd_scale"]
    if value == "auto":
        if dataset is None:
            raise ConfigError("dotd scale 'auto' needs a dataset")
        return dotd_scale(dataset)
    try:
        scale = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad dotd scale: {value!r}") from exc
    return scale


def _make_metric(cfg: dict[str, Any], name: str,
                 dataset: AnnotationSet | None,
                 spec: AnchorSpec) -> tuple[PairwiseMetric, dict[str, Any]]:
    """Bind a metric plus a JSON-friendly description of its parameters."""
    context: dict[str, Any] = {}
    try:
        if name == "simd":
            params = _resolve_norm_params(cfg, dataset, spec)
            context = {"m": params.m, "n": params.n,
                       "pair_count": params.pair_count,
                       "source_tag": params.source_tag,
                       "norm_mode": cfg["norm_mode"]}
            return make_metric("simd", norm_params=params,
                               norm_mode=_norm_mode(cfg)), context
        if name == "dotd":
            scale = _resolve_dotd_scale(cfg, dataset)
            context = {"scale": scale}
            return make_metric("dotd", scale=scale), context
        if name == "nwd":
            context = {"c": cfg["nwd_c"]}
            return make_metric("nwd", c=cfg["nwd_c"]), context
        if name == "rfd":
            context = {"beta": cfg["rfd_beta"]}
            return make_metric("rfd", beta=cfg["rfd_beta"]), context
        if name == "iou":
            return make_metric("iou"), context
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")


def _write_json(path: Path, doc: dict[str, Any]) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _write_csv(path: Path, header_lines: list[str], columns: list[str],
               rows: list[list[Any]]) -> None:
    lines = [f"# {line}" for line in header_lines]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _assign_over_dataset(dataset: AnnotationSet, spec: AnchorSpec,
                         metric: PairwiseMetric,
                         thresholds: Thresholds) -> dict[SizeBucket, BucketStats]:
    totals: dict[SizeBucket, BucketStats] = {}
    for img in dataset.images:
        if not img.gts:
            continue
        grid = cached_grid(spec, (img.width, img.height))
        result = assign(metric.matrix(img.gt_boxes(), grid.anchors), thresholds)
        totals = merge_bucket_stats(totals, match_stats(result, img.gts))
    return totals


def _bucket_report(totals: dict[SizeBucket, BucketStats]) -> dict[str, Any]:
    report: dict[str, Any] = {}
    for bucket in SizeBucket:
        stats = totals.get(bucket)
        if stats is None or stats.gt_count == 0:
            continue
        report[bucket.value] = {
            "gt_count": stats.gt_count,
            "mean_positives": stats.mean_positives,
            "unmatched_fraction": stats.unmatched_fraction,
            "threshold_unmatched_fraction": stats.threshold_unmatched_fraction,
            "mean_best_score": stats.mean_best_score,
        }
    return report


def _overall_stats(totals: dict[SizeBucket, BucketStats]) -> BucketStats:
    overall = BucketStats()
    for stats in totals.values():
        overall.gt_count += stats.gt_count
        overall.positive_total += stats.positive_total
        overall.threshold_positive_total += stats.threshold_positive_total
        overall.unmatched += stats.unmatched
        overall.threshold_unmatched += stats.threshold_unmatched
        overall.best_score_total += stats.best_score_total
    return overall


def _overall_report(overall: BucketStats) -> dict[str, Any]:
    return {
        "gt_count": overall.gt_count,
        "mean_positives": overall.mean_positives,
        "unmatched_fraction": overall.unmatched_fraction,
        "threshold_unmatched_fraction": overall.threshold_unmatched_fraction,
        "mean_best_score": overall.mean_best_score,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_calibrate(cfg: dict[str, Any]) -> int:
    out = _require_out(cfg)
    dataset = _load_dataset(cfg)
    spec = _anchor_spec(cfg)
    try:
        params = calibrate(dataset, spec, levels=cfg["levels"],
                           subsample=cfg["subsample"], seed=cfg["seed"],
                           workers=cfg["workers"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    save_norm_params(params, out / "norm_params.json")
    print(f"calibrated m={params.m!r} n={params.n!r} "
          f"pairs={params.pair_count} -> {out / 'norm_params.json'}")
    return 0


def cmd_assign_stats(cfg: dict[str, Any]) -> int:
    out = _require_out(cfg)
    dataset = _load_dataset(cfg)
    spec = _anchor_spec(cfg)
    thresholds = _thresholds(cfg)
    metric, context = _make_metric(cfg, cfg["metric"], dataset, spec)
    totals = _assign_over_dataset(dataset, spec, metric, thresholds)
    buckets = _bucket_report(totals)
    overall = _overall_report(_overall_stats(totals))

    doc = {
        "header": _header(cfg, "assign-stats"),
        "metric": {"name": metric.name, **context},
        "images": len(dataset.images),
        "gts": dataset.num_gts,
        "buckets": buckets,
        "overall": overall,
    }
    _write_json(out / "assign_stats.json", doc)
    columns = ["bucket", "gt_count", "mean_positives", "unmatched_fraction",
               "threshold_unmatched_fraction", "mean_best_score"]
    rows = [[name, b["gt_count"], b["mean_positives"], b["unmatched_fraction"],
             b["threshold_unmatched_fraction"], b["mean_best_score"]]
            for name, b in buckets.items()]
    _write_csv(out / "assign_stats.csv",
               [f"boxsim {__version__} assign-stats metric={metric.name}"],
               columns, rows)

    print(f"assign-stats metric={metric.name} gts={dataset.num_gts}")
    for name, b in buckets.items():
        print(f"  {name}: n={b['gt_count']} mean_pos={b['mean_positives']:.3f} "
              f"unmatched={b['unmatched_fraction']:.3f} "
              f"best={b['mean_best_score']:.3f}")
    print(f"  overall: n={overall['gt_count']} "
          f"mean_pos={overall['mean_positives']:.3f} "
          f"unmatched={overall['unmatched_fraction']:.3f}")
    return 0


def cmd_compare(cfg: dict[str, Any]) -> int:
    out = _require_out(cfg)
    dataset = _load_dataset(cfg)
    spec = _anchor_spec(cfg)
    thresholds = _thresholds(cfg)

    metrics: dict[str, tuple[PairwiseMetric, dict[str, Any]]] = {}
    for name in METRIC_NAMES:
        metrics[name] = _make_metric(cfg, name, dataset, spec)

    summary: dict[str, Any] = {}
    for name, (metric, context) in metrics.items():
        totals = _assign_over_dataset(dataset, spec, metric, thresholds)
        summary[name] = {
            "params": context,
            "buckets": _bucket_report(totals),
            "overall": _overall_report(_overall_stats(totals)),
        }

    # Sampled per-pair scores: a deterministic draw of ground truths,
    # one random anchor each.
    rng = np.random.default_rng(cfg["seed"])
    slots = [(img, g) for img in dataset.images for g in range(len(img.gts))]
    rows: list[list[Any]] = []
    if slots:
        k = min(int(cfg["samples"]), len(slots))
        chosen = sorted(int(i) for i in rng.choice(len(slots), size=k,
                                                   replace=False))
        for slot in chosen:
            img, g = slots[slot]
            grid = cached_grid(spec, (img.width, img.height))
            anchor_idx = int(rng.integers(len(grid)))
            gt_box = img.gts[g].box
            anchor_box = CBox(*grid.anchors[anchor_idx])
            row: list[Any] = [img.id, g, anchor_idx]
            for name in METRIC_NAMES:
                row.append(metrics[name][0].pair(gt_box, anchor_box))
            rows.append(row)

    doc = {
        "header": _header(cfg, "compare"),
        "images": len(dataset.images),
        "gts": dataset.num_gts,
        "metrics": summary,
    }
    _write_json(out / "compare.json", doc)
    _write_csv(out / "compare_pairs.csv",
               [f"boxsim {__version__} compare sampled pairs"],
               ["image_id", "gt_index", "anchor_index", *METRIC_NAMES], rows)

    print(f"compare gts={dataset.num_gts} metrics={','.join(METRIC_NAMES)}")
    for name in METRIC_NAMES:
        overall = summary[name]["overall"]
        print(f"  {name}: mean_pos={overall['mean_positives']:.3f} "
              f"unmatched={overall['unmatched_fraction']:.3f} "
              f"best={overall['mean_best_score']:.3f}")
    return 0


def cmd_synth(cfg: dict[str, Any]) -> int:
    out = _require_out(cfg)
    try:
        dataset = synth_dataset(count=int(cfg["count"]),
                                image_size=tuple(cfg["image_size"]),
                                scale_range=tuple(cfg["scale_range"]),
                                objects_per_image=int(cfg["objects_per_image"]),
                                rng_seed=int(cfg["seed"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = out / "synth_dataset.json"
    write_coco(dataset, path)
    histogram: dict[str, int] = {}
    for gt in dataset.iter_gts():
        name = size_bucket(gt.box).value
        histogram[name] = histogram.get(name, 0) + 1
    buckets = " ".join(f"{b.value}={histogram[b.value]}" for b in SizeBucket
                       if b.value in histogram)
    print(f"synth images={len(dataset.images)} gts={dataset.num_gts} "
          f"{buckets} -> {path}")
    return 0


def cmd_nms_demo(cfg: dict[str, Any]) -> int:
    out = _require_out(cfg)
    if not cfg["detections"]:
        raise ConfigError("nms-demo needs a detections file (--detections)")
    detections = load_detections(cfg["detections"])
    spec = _anchor_spec(cfg)
    name = cfg["nms_metric"]
    if name not in ("iou", "simd"):
        raise ConfigError(f"nms metric must be iou or simd, got {name!r}")
    metric, context = _make_metric(cfg, name, None, spec)
    thr = float(cfg["nms_thr"])
    if not 0.0 <= thr <= 1.0:
        raise ConfigError(f"nms threshold must lie in [0, 1], got {thr}")
    kept = greedy_suppress(detections, metric, thr,
                           class_aware=bool(cfg["class_aware"]))
    kept_rows = [{"index": i,
                  "bbox": [detections[i].box.cx, detections[i].box.cy,
                           detections[i].box.w, detections[i].box.h],
                  "score": detections[i].score,
                  "category_id": detections[i].category_id}
                 for i in kept]
    doc = {
        "header": _header(cfg, "nms-demo"),
        "metric": {"name": name, **context, "threshold": thr},
        "total": len(detections),
        "kept_count": len(kept),
        "kept": kept_rows,
    }
    _write_json(out / "nms_kept.json", doc)
    save_detections([detections[i] for i in kept], out / "nms_detections.json")
    print(f"nms-demo metric={name} thr={thr!r} kept {len(kept)}/{len(detections)}"
          f" -> {out / 'nms_kept.json'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _float_or_auto(text: str):
    return "auto" if text == "auto" else float(text)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--dataset", help="COCO-style annotation JSON")
    parser.add_argument("--out", help="output directory for reports")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument("--workers", type=int,
                        help="calibration worker threads (default 1)")
    parser.add_argument("--anchors-config", dest="anchors", type=json.loads,
                        help="anchor spec as inline JSON "
                             '(e.g. \'{"levels": [[8, 8]]}\')')


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metric", choices=list(METRIC_NAMES),
                        help="assignment metric (default simd)")
    parser.add_argument("--pos", type=float, help="positive threshold (default 0.7)")
    parser.add_argument("--neg", type=float, help="negative threshold (default 0.3)")
    parser.add_argument("--min-pos", dest="min_pos", type=float,
                        help="fallback minimum score (default 0.3)")
    parser.add_argument("--norm-mode", dest="norm_mode",
                        choices=[m.value for m in NormMode],
                        help="simd normalization mode (default both)")
    parser.add_argument("--norm-params", dest="norm_params",
                        help="NormParams JSON file for simd")
    parser.add_argument("--norm-m", dest="norm_m", type=float,
                        help="direct x/width normalization parameter")
    parser.add_argument("--norm-n", dest="norm_n", type=float,
                        help="direct y/height normalization parameter")
    parser.add_argument("--dotd-scale", dest="dotd_scale", type=_float_or_auto,
                        help="dotd dataset scale in px, or 'auto'")
    parser.add_argument("--nwd-c", dest="nwd_c", type=float,
                        help="nwd normalizer in px (default 12.8)")
    parser.add_argument("--rfd-beta", dest="rfd_beta", type=float,
                        help="rfd aspect scaling (default 1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxsim",
        description="Bounding-box similarity metrics, calibration, "
                    "assignment statistics, and NMS.")
    parser.add_argument("--version", action="version",
                        version=f"boxsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate",
                       help="fit simd normalization parameters over a dataset")
    _add_common(p)
    p.add_argument("--levels", help="comma-separated pyramid level indices")
    p.add_argument("--subsample", type=float,
                   help="anchor sampling rate in (0, 1]")

    p = sub.add_parser("assign-stats",
                       help="per-size-bucket assignment quality for one metric")
    _add_common(p)
    _add_metric_flags(p)

    p = sub.add_parser("compare",
                       help="assignment summaries for every metric")
    _add_common(p)
    _add_metric_flags(p)
    p.add_argument("--samples", type=int,
                   help="sampled pairs in compare_pairs.csv (default 200)")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--count", type=int, help="number of images (default 20)")
    p.add_argument("--image-size", dest="image_size", type=int, nargs=2,
                   metavar=("W", "H"), help="image size in px (default 512 512)")
    p.add_argument("--scale-range", dest="scale_range", type=float, nargs=2,
                   metavar=("LO", "HI"),
                   help="object edge scale range in px (default 4 8)")
    p.add_argument("--objects", dest="objects_per_image", type=int,
                   help="objects per image (default 10)")

    p = sub.add_parser("nms-demo", help="greedy NMS over a detections file")
    _add_common(p)
    _add_metric_flags(p)
    p.add_argument("--detections", help="detections JSON file")
    p.add_argument("--nms-metric", dest="nms_metric", choices=["iou", "simd"],
                   help="suppression metric (default iou)")
    p.add_argument("--nms-thr", dest="nms_thr", type=float,
                   help="suppression threshold (default 0.5)")
    p.add_argument("--class-aware", dest="class_aware", action="store_true",
                   default=None, help="suppress only within a category")
    return parser


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "assign-stats": cmd_assign_stats,
    "compare": cmd_compare,
    "synth": cmd_synth,
    "nms-demo": cmd_nms_demo,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"boxsim: config error: {exc}", file=sys.stderr)
        return 2
    except DatasetError as exc:
        print(f"boxsim: data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
