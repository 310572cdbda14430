import itertools
import math

import numpy as np
import pytest

from rovermap.errors import DegenerateProbability, FrameMismatch
from rovermap.fusion import (FUSED_LABELS, FusionParams, PointCloud,
                             SemanticVoxelGrid, VoxelCell, log_odds_update,
                             probability_from_log_odds)
from rovermap.geometry import Pose
from rovermap.labels import Label

IDENTITY = Pose.identity("world")


def sequential_bayes(probabilities, prior=0.5):
    """Direct probability-domain Bayes product: the independent oracle."""
    p = prior
    for q in probabilities:
        num = q * p / prior
        den = num + (1 - q) * (1 - p) / (1 - prior)
        p = num / den
    return p


def sensor_pose(frame="world"):
    return Pose(np.eye(3), np.zeros(3), "left_camera", frame)


class TestLogOddsUpdate:
    def test_single_update(self):
        assert log_odds_update(0.0, 0.9, 0.5) == pytest.approx(2.197224577, abs=1e-9)

    def test_uninformative(self):
        assert log_odds_update(1.23, 0.5, 0.5) == pytest.approx(1.23)

    def test_two_updates_match_oracle(self):
        l = log_odds_update(log_odds_update(0.0, 0.9), 0.9)
        assert l == pytest.approx(4.394449155, abs=1e-9)
        p = probability_from_log_odds(l)
        assert p == pytest.approx(0.987804878, abs=1e-9)
        assert p == pytest.approx(sequential_bayes([0.9, 0.9]), abs=1e-12)

    def test_oracle_equivalence_n_updates(self):
        for n in range(1, 31):
            l = 0.0
            for _ in range(n):
                l = log_odds_update(l, 0.9)
            assert probability_from_log_odds(l) == pytest.approx(
                sequential_bayes([0.9] * n), abs=1e-9)

    def test_mixed_probabilities_match_oracle(self):
        rng = np.random.default_rng(0)
        ps = rng.uniform(0.1, 0.95, size=12)
        l = 0.0
        for p in ps:
            l = log_odds_update(l, p)
        assert probability_from_log_odds(l) == pytest.approx(
            sequential_bayes(list(ps)), abs=1e-9)

    def test_degenerate_probability(self):
        with pytest.raises(DegenerateProbability):
            log_odds_update(0.0, 1.0)
        with pytest.raises(DegenerateProbability):
            log_odds_update(0.0, 0.0)
        with pytest.raises(DegenerateProbability):
            log_odds_update(0.0, 0.9, p_prior=0.0)

    def test_monotone_increase(self):
        l = 0.0
        prev = probability_from_log_odds(l)
        for _ in range(10):
            l = log_odds_update(l, 0.9)
            p = probability_from_log_odds(l)
            assert p > prev
            prev = p


class TestCellProbability:
    def test_zero_log_odds(self):
        assert probability_from_log_odds(0.0) == 0.5

    def test_logistic_inverse(self):
        assert probability_from_log_odds(2.197224577) == pytest.approx(0.9, abs=1e-9)

    def test_range(self):
        for l in (-30, -1, 0, 3, 30):
            assert 0.0 < probability_from_log_odds(l) < 1.0

    def test_untouched_label_returns_prior(self):
        grid = SemanticVoxelGrid()
        assert grid.cell_probability((5, 5, 5), Label.ROCKS) == 0.5


class TestInsert:
    def test_single_rock_point(self):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[0.1, 0.1, 0.1]]),
                           np.array([Label.ROCKS]), "left_camera")
        stats = grid.insert_labeled_cloud(cloud, sensor_pose())
        assert stats.inserted == 1 and stats.updates == 1
        cell = grid.cells[(0, 0, 0)]
        assert cell.log_odds[FUSED_LABELS.index(Label.ROCKS)] == pytest.approx(
            2.197224577, abs=1e-9)

    def test_background_ignored(self):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[0.1, 0.1, 0.1]]),
                           np.array([Label.BACKGROUND]), "left_camera")
        stats = grid.insert_labeled_cloud(cloud, sensor_pose())
        assert len(grid) == 0 and stats.skipped_background == 1

    def test_two_frames_accumulate(self):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[0.1, 0.1, 0.1]]),
                           np.array([Label.ROCKS]), "left_camera")
        grid.insert_labeled_cloud(cloud, sensor_pose())
        grid.insert_labeled_cloud(cloud, sensor_pose())
        cell = grid.cells[(0, 0, 0)]
        assert cell.log_odds[1] == pytest.approx(4.394449155, abs=1e-9)

    def test_duplicates_within_frame_collapse(self):
        grid = SemanticVoxelGrid()
        pts = np.array([[0.05, 0.05, 0.05], [0.15, 0.15, 0.15], [0.1, 0.1, 0.1]])
        cloud = PointCloud(pts, np.full(3, Label.ROCKS), "left_camera")
        stats = grid.insert_labeled_cloud(cloud, sensor_pose())
        assert stats.updates == 1
        assert grid.cells[(0, 0, 0)].log_odds[1] == pytest.approx(2.197224577)

    def test_max_range_filter(self):
        grid = SemanticVoxelGrid(FusionParams(max_range_m=1.0))
        pts = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 5.0]])
        cloud = PointCloud(pts, np.full(2, Label.SAND), "left_camera")
        stats = grid.insert_labeled_cloud(cloud, sensor_pose())
        assert stats.inserted == 1 and stats.skipped_range == 1

    def test_frame_mismatch(self):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.zeros((1, 3)), np.array([Label.SAND]), "other")
        with pytest.raises(FrameMismatch):
            grid.insert_labeled_cloud(cloud, sensor_pose())
        grid_local = SemanticVoxelGrid(frame="map")
        cloud2 = PointCloud(np.zeros((1, 3)), np.array([Label.SAND]), "left_camera")
        with pytest.raises(FrameMismatch):
            grid_local.insert_labeled_cloud(cloud2, sensor_pose("world"))

    def test_negative_coordinates_bin_by_floor(self):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[-0.05, 0.05, -0.25]]),
                           np.array([Label.SAND]), "left_camera")
        grid.insert_labeled_cloud(cloud, sensor_pose())
        assert (-1, 0, -2) in grid.cells

    def test_binning_center_distance(self):
        grid = SemanticVoxelGrid()
        rng = np.random.default_rng(1)
        pts = rng.uniform(-2, 2, size=(200, 3))
        bound = 0.2 * math.sqrt(3) / 2 + 1e-12
        idx = grid.voxel_index(pts)
        centers = grid.voxel_center(idx)
        assert np.all(np.linalg.norm(pts - centers, axis=1) <= bound)


class TestExtract:
    def _grid_with(self, rocks_n, sand_n):
        grid = SemanticVoxelGrid()
        cloud_r = PointCloud(np.array([[0.1, 0.1, 0.1]]), np.array([Label.ROCKS]),
                             "left_camera")
        cloud_s = PointCloud(np.array([[0.1, 0.1, 0.1]]), np.array([Label.SAND]),
                             "left_camera")
        for _ in range(rocks_n):
            grid.insert_labeled_cloud(cloud_r, sensor_pose())
        for _ in range(sand_n):
            grid.insert_labeled_cloud(cloud_s, sensor_pose())
        return grid

    def test_rock_beats_untouched_sand(self):
        out = self._grid_with(1, 0).extract_semantic_map()
        assert out == [((0, 0, 0), Label.ROCKS, pytest.approx(0.9, abs=1e-9))]

    def test_all_prior_not_emitted(self):
        grid = SemanticVoxelGrid()
        assert grid.extract_semantic_map() == []
        grid.cells[(0, 0, 0)] = VoxelCell(np.zeros(2))
        assert grid.extract_semantic_map() == []

    def test_exact_tie_goes_to_rocks(self):
        out = self._grid_with(2, 2).extract_semantic_map()
        assert len(out) == 1
        assert out[0][1] == Label.ROCKS

    def test_below_threshold_not_emitted(self):
        # single sand update: p = 0.9 > 0.7 emits; prior-only does not
        grid = SemanticVoxelGrid(FusionParams(occupied_threshold=0.95))
        out = self._grid_with(0, 1)
        out.params = grid.params
        assert out.extract_semantic_map() == []

    def test_each_voxel_once_single_label(self):
        grid = self._grid_with(3, 1)
        out = grid.extract_semantic_map()
        keys = [k for k, _, _ in out]
        assert len(keys) == len(set(keys)) == 1


class TestOrderIndependence:
    def test_permuted_frames_identical(self):
        rng = np.random.default_rng(7)
        frames = []
        for _ in range(6):
            pts = rng.uniform(-1, 1, size=(50, 3))
            labs = rng.integers(0, 3, size=50).astype(np.uint8)
            frames.append(PointCloud(pts, labs, "left_camera"))

        def build(order):
            g = SemanticVoxelGrid()
            for i in order:
                g.insert_labeled_cloud(frames[i], sensor_pose())
            return g

        ref = build(range(6))
        for order in itertools.islice(itertools.permutations(range(6)), 10):
            g = build(order)
            assert set(g.cells) == set(ref.cells)
            for k in ref.cells:
                assert np.allclose(g.cells[k].log_odds, ref.cells[k].log_odds,
                                   atol=1e-12)

    def test_merge_equals_sequential(self):
        rng = np.random.default_rng(8)
        frames = [PointCloud(rng.uniform(-1, 1, size=(40, 3)),
                             rng.integers(0, 2, size=40).astype(np.uint8),
                             "left_camera") for _ in range(4)]
        seq = SemanticVoxelGrid()
        for f in frames:
            seq.insert_labeled_cloud(f, sensor_pose())
        a, b = SemanticVoxelGrid(), SemanticVoxelGrid()
        for f in frames[:2]:
            a.insert_labeled_cloud(f, sensor_pose())
        for f in frames[2:]:
            b.insert_labeled_cloud(f, sensor_pose())
        a.merge(b)
        assert set(a.cells) == set(seq.cells)
        for k in seq.cells:
            assert np.allclose(a.cells[k].log_odds, seq.cells[k].log_odds, atol=1e-12)


class TestExport:
    def test_csv_dump(self, tmp_path):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[0.1, 0.1, 0.1]]), np.array([Label.ROCKS]),
                           "left_camera")
        grid.insert_labeled_cloud(cloud, sensor_pose())
        path = tmp_path / "grid.csv"
        grid.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "ix,iy,iz,label,log_odds"
        assert lines[1].startswith("0,0,0,ROCKS,2.19722457734")

    def test_ply_export(self, tmp_path):
        grid = SemanticVoxelGrid()
        cloud = PointCloud(np.array([[0.1, 0.1, 0.1]]), np.array([Label.ROCKS]),
                           "left_camera")
        grid.insert_labeled_cloud(cloud, sensor_pose())
        path = tmp_path / "map.ply"
        grid.to_ply(path)
        text = path.read_text().splitlines()
        assert text[0] == "ply"
        assert "element vertex 1" in text
        assert text[-1] == "0.100000 0.100000 0.100000 180 60 40"


class TestFusionParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            FusionParams(l_occ_probability=0.4)
        with pytest.raises(ValueError):
            FusionParams(occupied_threshold=1.0)
        with pytest.raises(ValueError):
            FusionParams(voxel_size_m=0.0)
