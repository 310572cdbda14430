import json
from pathlib import Path

import numpy as np
import pytest

from conftest import EVAL_GEOMETRY, FIVE_BOXES, make_scene
from rovermap.cli import main
from rovermap.errors import ConfigInvalid, DatasetIncomplete, MismatchedDatasets
from rovermap.geometry import CameraModel
from rovermap.pipeline import RunConfig, compare, load_run_config, run
from rovermap.synth import emit_dataset


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    cam = CameraModel(300.0, 0.12, (159.5, 119.5), (320, 240))
    scene = make_scene(cam, n_frames=4, rocks=FIVE_BOXES[:2], raster=EVAL_GEOMETRY)
    return emit_dataset(scene, tmp_path_factory.mktemp("ds") / "data")


class TestRun:
    def test_cnn_run_writes_artifacts(self, dataset, tmp_path):
        result = run(RunConfig(dataset=dataset, method="cnn", out_dir=tmp_path / "out"))
        out = result.out_dir
        for name in ("map.ply", "grid.csv", "predicted_raster.png",
                     "metrics.csv", "run_manifest.json"):
            assert (out / name).exists(), name
        assert result.warnings == 0
        assert result.report.iou >= 0.9

    def test_mlesac_run(self, dataset, tmp_path):
        result = run(RunConfig(dataset=dataset, method="mlesac",
                               out_dir=tmp_path / "out"))
        assert result.report.iou >= 0.8

    def test_frame_range(self, dataset, tmp_path):
        result = run(RunConfig(dataset=dataset, frame_range=(0, 1),
                               out_dir=tmp_path / "out"))
        manifest = json.loads((tmp_path / "out" / "run_manifest.json").read_text())
        assert manifest["frames"] == ["000000", "000001"]
        assert result.frames_processed == 2

    def test_empty_frame_range(self, dataset, tmp_path):
        with pytest.raises(DatasetIncomplete):
            run(RunConfig(dataset=dataset, frame_range=(7, 3),
                          out_dir=tmp_path / "out"))

    def test_rerun_bit_identical(self, dataset, tmp_path):
        a = run(RunConfig(dataset=dataset, out_dir=tmp_path / "a")).out_dir
        b = run(RunConfig(dataset=dataset, out_dir=tmp_path / "b")).out_dir
        assert (a / "grid.csv").read_bytes() == (b / "grid.csv").read_bytes()
        assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()

    def test_missing_label_frame_skipped(self, dataset, tmp_path):
        broken = tmp_path / "broken"
        import shutil
        shutil.copytree(dataset, broken)
        (broken / "labels" / "000001.png").unlink()
        result = run(RunConfig(dataset=broken, method="cnn",
                               out_dir=tmp_path / "out"))
        assert result.warnings == 1
        assert result.frames_processed == 3

    def test_sgm_path_without_disparity_rasters(self, dataset, tmp_path):
        result = run(RunConfig(dataset=dataset, frame_range=(0, 0),
                               use_disparity_rasters=False,
                               out_dir=tmp_path / "out"))
        assert result.frames_processed == 1
        assert (tmp_path / "out" / "grid.csv").stat().st_size > 100


class TestRunConfigFile:
    def test_load(self, dataset, tmp_path):
        cfg_text = (
            f"dataset {dataset}\n"
            "method mlesac\n"
            "frames 0..2\n"
            "out results\n"
            "fusion.voxel_size_m 0.25\n"
            "mlesac.seed 3\n"
            "matching.max_disparity 32\n"
            "classifier.rock_height_threshold_m 0.08\n"
        )
        path = tmp_path / "run.cfg"
        path.write_text(cfg_text)
        cfg = load_run_config(path)
        assert cfg.method == "mlesac"
        assert cfg.frame_range == (0, 2)
        assert cfg.fusion.voxel_size_m == 0.25
        assert cfg.mlesac.seed == 3
        assert cfg.matching.max_disparity == 32
        assert cfg.classifier.rock_height_threshold_m == 0.08

    def test_unknown_key(self, dataset, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(f"dataset {dataset}\nbogus 1\n")
        with pytest.raises(ConfigInvalid):
            load_run_config(path)

    def test_bad_method(self, dataset, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(f"dataset {dataset}\nmethod dnn\n")
        with pytest.raises(ConfigInvalid):
            load_run_config(path)

    def test_missing_dataset(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("method cnn\n")
        with pytest.raises(ConfigInvalid):
            load_run_config(path)


class TestCompare:
    def test_two_methods(self, dataset, tmp_path):
        a = run(RunConfig(dataset=dataset, method="cnn", out_dir=tmp_path / "a"))
        b = run(RunConfig(dataset=dataset, method="mlesac", out_dir=tmp_path / "b"))
        table = compare(a.out_dir / "run_manifest.json",
                        b.out_dir / "run_manifest.json",
                        out_dir=tmp_path / "cmp")
        assert "cnn" in table and "mlesac" in table
        assert (tmp_path / "cmp" / "comparison.csv").exists()
        assert (tmp_path / "cmp" / "comparison.png").exists()

    def test_mismatched_datasets(self, dataset, tmp_path):
        a = run(RunConfig(dataset=dataset, out_dir=tmp_path / "a"))
        manifest = json.loads((tmp_path / "a" / "run_manifest.json").read_text())
        manifest["dataset"] = "/somewhere/else"
        other = tmp_path / "other_manifest.json"
        other.write_text(json.dumps(manifest))
        with pytest.raises(MismatchedDatasets):
            compare(a.out_dir / "run_manifest.json", other)


class TestCli:
    SCENE = """\
camera focal_px=300 baseline_m=0.12 cx=159.5 cy=119.5 width=320 height=240
rock box cx=2.5 cy=0.5 sx=0.5 sy=0.5 sz=0.3
pose 0.0 0.0 1.0 25.0
pose 0.25 0.0 1.0 25.0
raster origin_x=0 origin_y=-4 width=70 height=40 cell_size_m=0.2
"""

    def test_synth_run_compare(self, tmp_path, capsys):
        scene_path = tmp_path / "scene.cfg"
        scene_path.write_text(self.SCENE)
        assert main(["synth", "--scene", str(scene_path),
                     "--out", str(tmp_path / "data")]) == 0
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dataset {tmp_path / 'data'}\n")
        assert main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / "a")]) == 0
        assert main(["run", "--config", str(cfg), "--method", "mlesac",
                     "--out", str(tmp_path / "b")]) == 0
        assert main(["compare", str(tmp_path / "a" / "run_manifest.json"),
                     str(tmp_path / "b" / "run_manifest.json")]) == 0
        out = capsys.readouterr().out
        assert "Accuracy" in out

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dataset /does/not/exist\n")
        assert main(["run", "--config", str(cfg)]) == 1

    def test_dataset_error_exit_code(self, tmp_path, dataset):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"dataset {dataset}\n")
        assert main(["run", "--config", str(cfg), "--frames", "9..5",
                     "--out", str(tmp_path / "out")]) == 2
