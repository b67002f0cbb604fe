import numpy as np
import pytest

from helpers import flood_fill_labels, same_partition
from lidargrid.bev import (
    BevConfig,
    GeometryMismatch,
    OutputAttributeGrid,
    cluster_output_grid,
    extract_channels,
    load_channel_image,
    occupancy_detector,
    postprocess_clusters,
)

CFG = BevConfig(image_size=40, range=6.0)  # 0.3 m cells


def zero_attr(cfg=CFG, **overrides):
    n = cfg.image_size
    fields = dict(
        objectness=np.zeros((n, n)),
        center_offset_x=np.zeros((n, n)),
        center_offset_y=np.zeros((n, n)),
        confidence=np.zeros((n, n)),
        height=np.zeros((n, n)),
    )
    fields.update(overrides)
    return OutputAttributeGrid(config=cfg, **fields)


class TestExtractChannels:
    def test_singleton_statistics(self):
        pts = np.array([[0.1, 0.1, 1.2, 0.5]])
        img = extract_channels(pts, CFG)
        occupied = np.nonzero(img.plane("occupancy"))
        assert len(occupied[0]) == 1
        i, j = occupied[0][0], occupied[1][0]
        assert img.plane("max_height")[i, j] == pytest.approx(1.2)
        assert img.plane("mean_height")[i, j] == pytest.approx(1.2)
        assert img.plane("max_intensity")[i, j] == pytest.approx(0.5)
        assert img.plane("mean_intensity")[i, j] == pytest.approx(0.5)

    def test_two_points_mean_and_max(self):
        pts = np.array([[0.1, 0.1, 1.0, 0.2], [0.1, 0.1, 2.0, 0.4]])
        img = extract_channels(pts, CFG)
        i, j = (np.nonzero(img.plane("occupancy"))[k][0] for k in (0, 1))
        assert img.plane("max_height")[i, j] == pytest.approx(2.0)
        assert img.plane("mean_height")[i, j] == pytest.approx(1.5)

    def test_empty_input_all_zero(self):
        img = extract_channels(np.zeros((0, 4)), CFG)
        assert not img.planes.any()

    def test_out_of_range_dropped(self):
        pts = np.array([[10.0, 0.0, 1.0, 0.5], [0.0, -10.0, 1.0, 0.5]])
        img = extract_channels(pts, CFG)
        assert not img.plane("occupancy").any()

    def test_channel_invariants_random_frames(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = rng.integers(0, 400)
            pts = np.column_stack([
                rng.uniform(-8, 8, n), rng.uniform(-8, 8, n),
                rng.normal(0, 2, n), rng.uniform(0, 1, n),
            ])
            img = extract_channels(pts, CFG)
            occ = img.plane("occupancy") > 0
            assert (img.plane("mean_height")[occ]
                    <= img.plane("max_height")[occ] + 1e-6).all()
            assert (img.plane("mean_intensity")[occ]
                    <= img.plane("max_intensity")[occ] + 1e-6).all()
            np.testing.assert_array_equal(occ, img.plane("density") > 0)
            in_range = ((pts[:, 0] >= -6) & (pts[:, 0] < 6)
                        & (pts[:, 1] >= -6) & (pts[:, 1] < 6)).sum()
            assert occ.sum() <= in_range

    def test_density_is_bounded_log_count(self):
        pts = np.tile([0.1, 0.1, 1.0, 0.5], (63, 1))
        img = extract_channels(pts, CFG)
        assert img.plane("density").max() == pytest.approx(1.0, abs=1e-6)
        big = np.tile([0.1, 0.1, 1.0, 0.5], (500, 1))
        assert extract_channels(big, CFG).plane("density").max() == pytest.approx(1.0)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        pts = np.column_stack([rng.uniform(-6, 6, (200, 2)),
                               rng.normal(0, 1, (200, 1)),
                               rng.uniform(0, 1, (200, 1))])
        img = extract_channels(pts, CFG)
        path = tmp_path / "frame.bev"
        img.save(path)
        back = load_channel_image(path, half_range=CFG.range)
        np.testing.assert_array_equal(back.planes, img.planes)
        assert back.config == CFG

    def test_header_format(self, tmp_path):
        img = extract_channels(np.zeros((0, 4)), CFG)
        path = tmp_path / "frame.bev"
        img.save(path)
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").rstrip("\n")
        assert header == f"BEV v1 6 {CFG.image_size} {CFG.image_size}"

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "bad.bev"
        with open(path, "wb") as fh:
            fh.write(b"BEV v1 6 40 40\n")
            fh.write(b"\x00" * 100)
        with pytest.raises(GeometryMismatch):
            load_channel_image(path)


class TestClusterOutputGrid:
    def test_two_disjoint_blobs(self):
        obj = np.zeros((40, 40))
        obj[5:8, 5:8] = 1.0
        obj[20:23, 20:23] = 1.0
        attr = zero_attr(objectness=obj, confidence=obj.copy())
        clusters = cluster_output_grid(attr, 0.5)
        assert len(clusters) == 2

    def test_single_cell_zero_offset(self):
        obj = np.zeros((40, 40))
        obj[10, 10] = 0.9
        clusters = cluster_output_grid(zero_attr(objectness=obj), 0.5)
        assert len(clusters) == 1
        assert clusters[0].size == 1

    def test_zero_offsets_match_plain_components(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            obj = (rng.random((25, 25)) < 0.35).astype(float)
            cfg = BevConfig(image_size=25, range=5.0)
            attr = zero_attr(cfg=cfg, objectness=obj)
            clusters = cluster_output_grid(attr, 0.5)
            ref = flood_fill_labels(obj >= 0.5, 8)
            assert len(clusters) == ref.max()
            mine = np.zeros_like(ref)
            for label, c in enumerate(clusters, start=1):
                mine[c.cells[:, 0], c.cells[:, 1]] = label
            assert same_partition(mine, ref)

    def test_offsets_merge_separated_blobs(self):
        cfg = BevConfig(image_size=40, range=6.0)
        obj = np.zeros((40, 40))
        obj[10:12, 10:12] = 1.0
        obj[20:22, 20:22] = 1.0
        # blob A points its offsets at blob B's first cell
        centers = cfg.cell_centers()
        off_x = np.zeros((40, 40))
        off_y = np.zeros((40, 40))
        target = (centers[20], centers[20])
        for i in range(10, 12):
            for j in range(10, 12):
                off_x[i, j] = target[0] - centers[i]
                off_y[i, j] = target[1] - centers[j]
        attr = zero_attr(cfg=cfg, objectness=obj, center_offset_x=off_x,
                         center_offset_y=off_y)
        clusters = cluster_output_grid(attr, 0.5)
        assert len(clusters) == 1

    def test_offset_outside_grid_skipped(self):
        obj = np.zeros((40, 40))
        obj[0, 0] = 1.0
        off = np.zeros((40, 40))
        off[0, 0] = -100.0
        attr = zero_attr(objectness=obj, center_offset_x=off)
        clusters = cluster_output_grid(attr, 0.5)
        assert len(clusters) == 1

    def test_threshold_monotone(self):
        rng = np.random.default_rng(17)
        obj = rng.random((40, 40))
        attr = zero_attr(objectness=obj)
        sizes = []
        for thr in (0.2, 0.5, 0.8):
            clusters = cluster_output_grid(attr, thr)
            sizes.append(sum(c.size for c in clusters))
        assert sizes[0] >= sizes[1] >= sizes[2]

    def test_scores_validated(self):
        with pytest.raises(ValueError):
            zero_attr(objectness=np.full((40, 40), 1.5))
        with pytest.raises(ValueError):
            cluster_output_grid(zero_attr(), 1.5)


class TestPostprocess:
    def test_confidence_filter(self):
        obj = np.zeros((40, 40))
        obj[5:7, 5:7] = 1.0
        conf_hi = np.where(obj > 0, 0.9, 0.0)
        conf_lo = np.where(obj > 0, 0.3, 0.0)
        hi = cluster_output_grid(zero_attr(objectness=obj, confidence=conf_hi), 0.5)
        lo = cluster_output_grid(zero_attr(objectness=obj, confidence=conf_lo), 0.5)
        assert len(postprocess_clusters(hi, 0.5, CFG)) == 1
        assert len(postprocess_clusters(lo, 0.5, CFG)) == 0

    def test_center_includes_mean_offset(self):
        obj = np.zeros((40, 40))
        obj[10, 10] = 1.0
        conf = obj.copy()
        off_x = np.where(obj > 0, 0.25, 0.0)
        clusters = cluster_output_grid(
            zero_attr(objectness=obj, confidence=conf, center_offset_x=off_x), 0.5)
        est = postprocess_clusters(clusters, 0.5, CFG)[0]
        centers = CFG.cell_centers()
        assert est.center_x == pytest.approx(centers[10] + 0.25)
        assert est.center_y == pytest.approx(centers[10])

    def test_van_footprint_recovered(self):
        # footprint built from cells whose centers fall in a 5 x 2 m box
        cfg = BevConfig(image_size=224, range=10.0)  # ~0.0893 m cells
        centers = cfg.cell_centers()
        xs, ys = np.meshgrid(centers, centers, indexing="ij")
        inside = (np.abs(xs - 3.0) <= 2.5) & (np.abs(ys - 0.5) <= 1.0)
        obj = inside.astype(float)
        conf = inside.astype(float) * 0.9
        height = inside.astype(float) * 1.8
        attr = zero_attr(cfg=cfg, objectness=obj, confidence=conf, height=height)
        ests = postprocess_clusters(cluster_output_grid(attr, 0.5), 0.5, cfg)
        assert len(ests) == 1
        est = ests[0]
        assert abs(est.length - 5.0) <= cfg.cell_size + 1e-9
        assert abs(est.width - 2.0) <= cfg.cell_size + 1e-9
        assert est.center_x == pytest.approx(3.0, abs=cfg.cell_size)
        assert est.center_y == pytest.approx(0.5, abs=cfg.cell_size)
        assert est.height == pytest.approx(1.8)

    def test_class_tag_from_scores(self):
        cfg = BevConfig(image_size=8, range=2.0)
        n = cfg.image_size
        obj = np.zeros((n, n))
        obj[2, 2] = 1.0
        scores = np.zeros((n, n, 3))
        scores[2, 2] = [0.1, 0.7, 0.2]
        attr = OutputAttributeGrid(
            config=cfg, objectness=obj, center_offset_x=np.zeros((n, n)),
            center_offset_y=np.zeros((n, n)), confidence=obj.copy(),
            height=np.zeros((n, n)), class_scores=scores)
        est = postprocess_clusters(cluster_output_grid(attr, 0.5), 0.5, cfg)[0]
        assert est.class_tag == "class_1"


class TestOccupancyDetector:
    def test_geometry_round_trip(self):
        pts = np.array([[0.1, 0.1, 1.0, 0.5], [2.0, 2.0, 0.5, 0.4]])
        img = extract_channels(pts, CFG)
        attr = occupancy_detector(img)
        assert attr.config == CFG
        assert attr.objectness.max() == 1.0
        clusters = cluster_output_grid(attr, 0.5)
        assert len(clusters) == 2
