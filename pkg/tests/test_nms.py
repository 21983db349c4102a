"""Greedy suppression: worked chains, tie order, and a brute-force oracle."""

import numpy as np
import pytest

from boxsim import (CBox, Detection, MetricMatrix, NormParams, PairwiseMetric,
                    greedy_suppress, load_detections, make_metric,
                    save_detections)
from boxsim.datasets import DatasetFormatError, DatasetReadError

IOU = make_metric("iou")


def table_metric(table):
    """Metric that reads scores from a fixed table, keyed by each box's
    cx coordinate (boxes are built as CBox(idx, 0, 1, 1))."""
    table = np.asarray(table, dtype=np.float64)

    def matrix_fn(gts, anchors):
        g = np.asarray([b.cx if isinstance(b, CBox) else b[0] for b in gts])
        a = np.asarray([b.cx if isinstance(b, CBox) else b[0] for b in anchors])
        return MetricMatrix(table[np.ix_(g.astype(int), a.astype(int))])

    return PairwiseMetric(name="table", _matrix_fn=matrix_fn)


def brute_force_suppress(detections, metric, threshold, class_aware=False):
    """Quadratic restatement of the keeper loop using pair() calls."""
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].score, i))
    alive = [True] * len(detections)
    kept = []
    for i in order:
        if not alive[i]:
            continue
        alive[i] = False
        kept.append(i)
        for j in range(len(detections)):
            if not alive[j]:
                continue
            if class_aware and detections[j].category_id != detections[i].category_id:
                continue
            if metric.pair(detections[i].box, detections[j].box) > threshold:
                alive[j] = False
    return sorted(kept)


class TestDetection:
    def test_score_bounds(self):
        with pytest.raises(ValueError):
            Detection(CBox(0, 0, 1, 1), score=1.5)
        with pytest.raises(ValueError):
            Detection(CBox(0, 0, 1, 1), score=-0.1)

    def test_defaults(self):
        det = Detection(CBox(0, 0, 1, 1), score=0.5)
        assert det.category_id == 0


class TestWorkedExamples:
    def test_identical_boxes_keep_highest(self):
        box = CBox(10, 10, 4, 4)
        dets = [Detection(box, 0.6), Detection(box, 0.9), Detection(box, 0.7)]
        assert greedy_suppress(dets, IOU, 0.5) == [1]

    def test_disjoint_boxes_all_kept(self):
        dets = [Detection(CBox(10, 10, 4, 4), 0.9),
                Detection(CBox(50, 50, 4, 4), 0.8),
                Detection(CBox(90, 90, 4, 4), 0.7)]
        assert greedy_suppress(dets, IOU, 0.5) == [0, 1, 2]

    def test_chain_is_not_transitive(self):
        # A suppresses B (0.8 > 0.5); C only resembles B (dead), so C
        # survives even though the A-B-C chain is connected.
        table = [[1.0, 0.8, 0.2],
                 [0.8, 1.0, 0.8],
                 [0.2, 0.8, 1.0]]
        dets = [Detection(CBox(0, 0, 1, 1), 0.9),
                Detection(CBox(1, 0, 1, 1), 0.8),
                Detection(CBox(2, 0, 1, 1), 0.7)]
        assert greedy_suppress(dets, table_metric(table), 0.5) == [0, 2]

    def test_score_tie_prefers_earlier_detection(self):
        box = CBox(10, 10, 4, 4)
        dets = [Detection(box, 0.8), Detection(box, 0.8)]
        assert greedy_suppress(dets, IOU, 0.5) == [0]

    def test_strictly_greater_cut(self):
        # Similarity exactly at the threshold is not suppressed.
        table = [[1.0, 0.5], [0.5, 1.0]]
        dets = [Detection(CBox(0, 0, 1, 1), 0.9),
                Detection(CBox(1, 0, 1, 1), 0.8)]
        assert greedy_suppress(dets, table_metric(table), 0.5) == [0, 1]

    def test_threshold_one_keeps_everything(self):
        box = CBox(10, 10, 4, 4)
        dets = [Detection(box, 0.9), Detection(box, 0.8)]
        assert greedy_suppress(dets, IOU, 1.0) == [0, 1]

    def test_class_aware_spares_other_category(self):
        box = CBox(10, 10, 4, 4)
        dets = [Detection(box, 0.9, category_id=1),
                Detection(box, 0.8, category_id=2),
                Detection(box, 0.7, category_id=1)]
        assert greedy_suppress(dets, IOU, 0.5, class_aware=True) == [0, 1]
        assert greedy_suppress(dets, IOU, 0.5, class_aware=False) == [0]

    def test_empty_input(self):
        assert greedy_suppress([], IOU, 0.5) == []

    def test_single_detection(self):
        assert greedy_suppress([Detection(CBox(0, 0, 1, 1), 0.5)], IOU, 0.5) == [0]

    def test_threshold_validation(self):
        dets = [Detection(CBox(0, 0, 1, 1), 0.5)]
        with pytest.raises(ValueError):
            greedy_suppress(dets, IOU, 1.5)
        with pytest.raises(ValueError):
            greedy_suppress(dets, IOU, -0.1)


class TestProperties:
    def random_detections(self, rng, n):
        return [Detection(CBox(float(rng.uniform(0, 60)),
                               float(rng.uniform(0, 60)),
                               float(rng.uniform(2, 20)),
                               float(rng.uniform(2, 20))),
                          score=float(rng.random()),
                          category_id=int(rng.integers(0, 3)))
                for _ in range(n)]

    def test_matches_brute_force_iou(self):
        rng = np.random.default_rng(30)
        for _ in range(40):
            dets = self.random_detections(rng, int(rng.integers(0, 30)))
            thr = float(rng.choice([0.1, 0.3, 0.5, 0.7]))
            assert greedy_suppress(dets, IOU, thr) == \
                brute_force_suppress(dets, IOU, thr)

    def test_matches_brute_force_simd(self):
        rng = np.random.default_rng(31)
        simd = make_metric("simd", norm_params=NormParams(m=0.2, n=0.2))
        for _ in range(40):
            dets = self.random_detections(rng, int(rng.integers(0, 30)))
            thr = float(rng.choice([0.1, 0.3, 0.5]))
            assert greedy_suppress(dets, simd, thr) == \
                brute_force_suppress(dets, simd, thr)

    def test_matches_brute_force_class_aware(self):
        rng = np.random.default_rng(32)
        for _ in range(30):
            dets = self.random_detections(rng, int(rng.integers(0, 25)))
            assert greedy_suppress(dets, IOU, 0.4, class_aware=True) == \
                brute_force_suppress(dets, IOU, 0.4, class_aware=True)

    def test_kept_indices_sorted_and_unique(self):
        rng = np.random.default_rng(33)
        dets = self.random_detections(rng, 50)
        kept = greedy_suppress(dets, IOU, 0.4)
        assert kept == sorted(set(kept))
        assert all(0 <= i < 50 for i in kept)

    def test_top_scorer_always_kept(self):
        rng = np.random.default_rng(34)
        for _ in range(20):
            dets = self.random_detections(rng, int(rng.integers(1, 30)))
            best = max(range(len(dets)),
                       key=lambda i: (dets[i].score, -i))
            assert best in greedy_suppress(dets, IOU, 0.3)


class TestDetectionsIO:
    def test_round_trip(self, tmp_path):
        dets = [Detection(CBox(10.5, 20.25, 4.0, 8.0), 0.875, category_id=3),
                Detection(CBox(1, 2, 3, 4), 0.5)]
        path = tmp_path / "dets.json"
        save_detections(dets, path)
        loaded = load_detections(path)
        assert loaded == dets

    def test_write_is_byte_deterministic(self, tmp_path):
        dets = [Detection(CBox(1, 2, 3, 4), 0.5)]
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_detections(dets, p1)
        save_detections(dets, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetReadError):
            load_detections(tmp_path / "absent.json")

    def test_not_an_array(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"bbox": [1, 2, 3, 4]}')
        with pytest.raises(DatasetFormatError):
            load_detections(path)

    def test_row_missing_score(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"bbox": [1, 2, 3, 4]}]')
        with pytest.raises(DatasetFormatError):
            load_detections(path)

    def test_bad_bbox_arity(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"bbox": [1, 2, 3], "score": 0.5}]')
        with pytest.raises(DatasetFormatError):
            load_detections(path)

    def test_invalid_box_values(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"bbox": [1, 2, -3, 4], "score": 0.5}]')
        with pytest.raises(DatasetFormatError):
            load_detections(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(DatasetFormatError):
            load_detections(path)
