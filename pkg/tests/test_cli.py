"""Command-line interface: exit codes, outputs, and byte determinism."""

import json

import pytest

from boxsim import CBox, Detection, load_coco, load_norm_params, save_detections
from boxsim.cli import main
from boxsim.geometry import METRIC_NAMES

# One 16x16 image with a single-cell anchor layout: exactly one anchor
# centered at (8, 8) with size 16x16.
ONE_ANCHOR = '{"levels": [[16, 16]], "ratios": [1]}'


def write_dataset(path, bbox):
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "images": [{"id": 1, "width": 16, "height": 16}],
        "annotations": [{"id": 1, "image_id": 1, "category_id": 1,
                         "bbox": list(bbox)}],
        "categories": [{"id": 1, "name": "object"}],
    }
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def coincident_dataset(tmp_path):
    """Ground truth identical to the single anchor."""
    return write_dataset(tmp_path / "data.json", [0, 0, 16, 16])


@pytest.fixture
def offset_dataset(tmp_path):
    """Ground truth at (11, 11), size 8: both center offsets are 3 px,
    so each normalized ratio is 3 / (8 + 16) = 0.125 exactly."""
    return write_dataset(tmp_path / "data2.json", [7, 7, 8, 8])


class TestParser:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "boxsim" in capsys.readouterr().out

    def test_missing_command_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_unknown_metric_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["assign-stats", "--metric", "bogus"])


class TestSynth:
    def test_writes_loadable_dataset(self, tmp_path):
        out = tmp_path / "out"
        code = main(["synth", "--out", str(out), "--count", "3",
                     "--image-size", "64", "64", "--scale-range", "4", "8",
                     "--objects", "5", "--seed", "7"])
        assert code == 0
        dataset = load_coco(out / "synth_dataset.json")
        assert len(dataset.images) == 3
        assert dataset.num_gts == 15

    def test_byte_deterministic(self, tmp_path):
        args = ["synth", "--count", "2", "--image-size", "64", "64",
                "--objects", "4", "--seed", "3"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert (a / "synth_dataset.json").read_bytes() == \
            (b / "synth_dataset.json").read_bytes()

    def test_infeasible_scale_range_is_config_error(self, tmp_path):
        code = main(["synth", "--out", str(tmp_path / "o"),
                     "--image-size", "8", "8", "--scale-range", "50", "60"])
        assert code == 2

    def test_missing_out_is_config_error(self):
        assert main(["synth", "--count", "1"]) == 2


class TestCalibrate:
    def test_single_pair_fixture_exact(self, tmp_path, offset_dataset):
        out = tmp_path / "out"
        code = main(["calibrate", "--dataset", str(offset_dataset),
                     "--out", str(out), "--anchors-config", ONE_ANCHOR])
        assert code == 0
        params = load_norm_params(out / "norm_params.json")
        assert params.m == 0.125
        assert params.n == 0.125
        assert params.pair_count == 1

    def test_rerun_byte_identical(self, tmp_path, offset_dataset):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["calibrate", "--dataset", str(offset_dataset),
                "--anchors-config", ONE_ANCHOR]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert (a / "norm_params.json").read_bytes() == \
            (b / "norm_params.json").read_bytes()

    def test_missing_dataset_is_config_error(self, tmp_path):
        assert main(["calibrate", "--out", str(tmp_path / "o")]) == 2

    def test_unreadable_dataset_is_data_error(self, tmp_path):
        code = main(["calibrate", "--dataset", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 3

    def test_malformed_dataset_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["calibrate", "--dataset", str(bad),
                     "--out", str(tmp_path / "o")]) == 3

    def test_bad_levels_is_config_error(self, tmp_path, offset_dataset):
        code = main(["calibrate", "--dataset", str(offset_dataset),
                     "--out", str(tmp_path / "o"), "--levels", "zero"])
        assert code == 2


class TestAssignStats:
    @pytest.mark.parametrize("metric", METRIC_NAMES)
    def test_coincident_pair_is_positive_for_every_metric(
            self, tmp_path, coincident_dataset, metric):
        out = tmp_path / f"out-{metric}"
        code = main(["assign-stats", "--dataset", str(coincident_dataset),
                     "--out", str(out), "--anchors-config", ONE_ANCHOR,
                     "--metric", metric])
        assert code == 0
        doc = json.loads((out / "assign_stats.json").read_text())
        assert doc["metric"]["name"] == metric
        assert doc["overall"]["gt_count"] == 1
        assert doc["overall"]["mean_positives"] == 1.0
        assert doc["overall"]["unmatched_fraction"] == 0.0
        assert doc["overall"]["mean_best_score"] == 1.0

    def test_reports_identical_across_directories(self, tmp_path):
        # Same dataset content at two paths, two output directories:
        # report bytes must not depend on either location.
        d1 = write_dataset(tmp_path / "p1" / "d.json", [7, 7, 8, 8])
        d2 = write_dataset(tmp_path / "p2" / "d.json", [7, 7, 8, 8])
        o1, o2 = tmp_path / "o1", tmp_path / "o2"
        for dataset, out in ((d1, o1), (d2, o2)):
            code = main(["assign-stats", "--dataset", str(dataset),
                         "--out", str(out), "--anchors-config", ONE_ANCHOR,
                         "--metric", "simd"])
            assert code == 0
        for name in ("assign_stats.json", "assign_stats.csv"):
            assert (o1 / name).read_bytes() == (o2 / name).read_bytes()

    def test_csv_has_comment_header(self, tmp_path, coincident_dataset):
        out = tmp_path / "out"
        main(["assign-stats", "--dataset", str(coincident_dataset),
              "--out", str(out), "--anchors-config", ONE_ANCHOR,
              "--metric", "iou"])
        lines = (out / "assign_stats.csv").read_text().splitlines()
        assert lines[0].startswith("# ")
        assert lines[1].split(",")[0] == "bucket"

    def test_simd_auto_calibrates_from_dataset(self, tmp_path, offset_dataset):
        out = tmp_path / "out"
        code = main(["assign-stats", "--dataset", str(offset_dataset),
                     "--out", str(out), "--anchors-config", ONE_ANCHOR,
                     "--metric", "simd"])
        assert code == 0
        doc = json.loads((out / "assign_stats.json").read_text())
        assert doc["metric"]["m"] == 0.125
        assert doc["metric"]["n"] == 0.125

    def test_norm_params_file_beats_direct_values(self, tmp_path,
                                                  coincident_dataset,
                                                  offset_dataset):
        params_dir = tmp_path / "cal"
        main(["calibrate", "--dataset", str(offset_dataset),
              "--out", str(params_dir), "--anchors-config", ONE_ANCHOR])
        out = tmp_path / "out"
        code = main(["assign-stats", "--dataset", str(coincident_dataset),
                     "--out", str(out), "--anchors-config", ONE_ANCHOR,
                     "--metric", "simd",
                     "--norm-params", str(params_dir / "norm_params.json"),
                     "--norm-m", "9", "--norm-n", "9"])
        assert code == 0
        doc = json.loads((out / "assign_stats.json").read_text())
        assert doc["metric"]["m"] == 0.125

    def test_norm_m_without_n_is_config_error(self, tmp_path,
                                              coincident_dataset):
        code = main(["assign-stats", "--dataset", str(coincident_dataset),
                     "--out", str(tmp_path / "o"),
                     "--anchors-config", ONE_ANCHOR,
                     "--metric", "simd", "--norm-m", "0.5"])
        assert code == 2

    def test_bad_thresholds_is_config_error(self, tmp_path,
                                            coincident_dataset):
        code = main(["assign-stats", "--dataset", str(coincident_dataset),
                     "--out", str(tmp_path / "o"),
                     "--anchors-config", ONE_ANCHOR,
                     "--metric", "iou", "--pos", "0.2", "--neg", "0.6"])
        assert code == 2


class TestCompare:
    def test_coincident_pair_scores_one_everywhere(self, tmp_path,
                                                   coincident_dataset):
        out = tmp_path / "out"
        code = main(["compare", "--dataset", str(coincident_dataset),
                     "--out", str(out), "--anchors-config", ONE_ANCHOR,
                     "--samples", "5"])
        assert code == 0
        doc = json.loads((out / "compare.json").read_text())
        assert set(doc["metrics"]) == set(METRIC_NAMES)
        for name in METRIC_NAMES:
            assert doc["metrics"][name]["overall"]["mean_best_score"] == 1.0
        lines = (out / "compare_pairs.csv").read_text().splitlines()
        columns = lines[1].split(",")
        row = lines[2].split(",")
        for name in METRIC_NAMES:
            assert float(row[columns.index(name)]) == 1.0

    def test_byte_deterministic(self, tmp_path, offset_dataset):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["compare", "--dataset", str(offset_dataset),
                "--anchors-config", ONE_ANCHOR, "--samples", "3"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        for name in ("compare.json", "compare_pairs.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestNmsDemo:
    @pytest.fixture
    def detections_file(self, tmp_path):
        dets = [Detection(CBox(20, 20, 8, 8), 0.9),
                Detection(CBox(20, 20, 8, 8), 0.8),
                Detection(CBox(40, 40, 8, 8), 0.7)]
        path = tmp_path / "dets.json"
        save_detections(dets, path)
        return path

    def test_iou_suppression(self, tmp_path, detections_file):
        out = tmp_path / "out"
        code = main(["nms-demo", "--detections", str(detections_file),
                     "--out", str(out), "--nms-metric", "iou",
                     "--nms-thr", "0.5"])
        assert code == 0
        doc = json.loads((out / "nms_kept.json").read_text())
        assert doc["total"] == 3
        assert doc["kept_count"] == 2
        assert [row["index"] for row in doc["kept"]] == [0, 2]
        assert (out / "nms_detections.json").exists()

    def test_simd_needs_norm_parameters(self, tmp_path, detections_file):
        code = main(["nms-demo", "--detections", str(detections_file),
                     "--out", str(tmp_path / "o"), "--nms-metric", "simd"])
        assert code == 2

    def test_simd_with_direct_parameters(self, tmp_path, detections_file):
        out = tmp_path / "out"
        code = main(["nms-demo", "--detections", str(detections_file),
                     "--out", str(out), "--nms-metric", "simd",
                     "--norm-m", "0.2", "--norm-n", "0.2",
                     "--nms-thr", "0.5"])
        assert code == 0
        doc = json.loads((out / "nms_kept.json").read_text())
        assert [row["index"] for row in doc["kept"]] == [0, 2]

    def test_missing_detections_is_config_error(self, tmp_path):
        assert main(["nms-demo", "--out", str(tmp_path / "o")]) == 2

    def test_unreadable_detections_is_data_error(self, tmp_path):
        code = main(["nms-demo", "--detections", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 3

    def test_bad_threshold_is_config_error(self, tmp_path, detections_file):
        code = main(["nms-demo", "--detections", str(detections_file),
                     "--out", str(tmp_path / "o"), "--nms-thr", "1.5"])
        assert code == 2


class TestConfigFile:
    def test_config_supplies_settings(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 3, "image_size": [64, 64],
                                   "objects_per_image": 2, "seed": 5,
                                   "out": str(tmp_path / "out")}))
        assert main(["synth", "--config", str(cfg)]) == 0
        dataset = load_coco(tmp_path / "out" / "synth_dataset.json")
        assert len(dataset.images) == 3
        assert dataset.num_gts == 6

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 3, "image_size": [64, 64],
                                   "objects_per_image": 2,
                                   "out": str(tmp_path / "out")}))
        assert main(["synth", "--config", str(cfg), "--count", "1"]) == 0
        dataset = load_coco(tmp_path / "out" / "synth_dataset.json")
        assert len(dataset.images) == 1

    def test_unknown_key_is_config_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["synth", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_non_object_config_is_config_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert main(["synth", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_invalid_json_config_is_config_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{oops")
        assert main(["synth", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_file_is_config_error(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "o")]) == 2
