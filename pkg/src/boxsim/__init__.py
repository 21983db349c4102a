"""boxsim: bounding-box similarity metrics, dataset-adaptive calibration,
label assignment, and metric-parameterized NMS for tiny-object analysis."""

from .anchors import DEFAULT_SPEC, AnchorGrid, AnchorSpec, build_grid, cached_grid
from .assigner import (IGNORE, NEGATIVE, AssignmentResult, BucketStats,
                       Thresholds, assign, match_stats, merge_bucket_stats)
from .calibration import (CalibrationAccumulator, ZeroPairsError,
                          accumulate_image, calibrate, finalize,
                          load_norm_params, save_norm_params)
from .datasets import (AnnotationSet, Category, DanglingReferenceError,
                       DatasetError, DatasetFormatError, DatasetReadError,
                       EmptyDatasetError, GroundTruth, ImageRecord,
                       IngestSummary, SizeBucket, dotd_scale, load_coco,
                       size_bucket, synth_dataset, write_coco)
from .geometry import (EPS_NORM, METRIC_NAMES, CBox, MetricMatrix, NormMode,
                       NormParams, PairwiseMetric, as_box_array, dotd,
                       dotd_matrix, iou, iou_matrix, make_metric, nwd,
                       nwd_matrix, rfd, rfd_matrix, simd_components,
                       simd_matrix, simd_pair)
from .nms import Detection, greedy_suppress, load_detections, save_detections

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "EPS_NORM", "METRIC_NAMES", "CBox", "MetricMatrix", "NormMode",
    "NormParams", "PairwiseMetric", "as_box_array", "dotd", "dotd_matrix",
    "iou", "iou_matrix", "make_metric", "nwd", "nwd_matrix", "rfd",
    "rfd_matrix", "simd_components", "simd_matrix", "simd_pair",
    # anchors
    "DEFAULT_SPEC", "AnchorGrid", "AnchorSpec", "build_grid", "cached_grid",
    # datasets
    "AnnotationSet", "Category", "DanglingReferenceError", "DatasetError",
    "DatasetFormatError", "DatasetReadError", "EmptyDatasetError",
    "GroundTruth", "ImageRecord", "IngestSummary", "SizeBucket", "dotd_scale",
    "load_coco", "size_bucket", "synth_dataset", "write_coco",
    # calibration
    "CalibrationAccumulator", "ZeroPairsError", "accumulate_image",
    "calibrate", "finalize", "load_norm_params", "save_norm_params",
    # assigner
    "IGNORE", "NEGATIVE", "AssignmentResult", "BucketStats", "Thresholds",
    "assign", "match_stats", "merge_bucket_stats",
    # nms
    "Detection", "greedy_suppress", "load_detections", "save_detections",
]
