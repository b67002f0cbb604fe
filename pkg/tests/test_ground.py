import itertools
import math

import numpy as np
import pytest

from helpers import least_squares_plane
from lidargrid.ground import (
    DegenerateInput,
    NoPlaneFound,
    PlaneModel,
    RansacParams,
    fit_plane_ransac,
    split_ground,
)


def flat_cloud(n, z, rng, spread=20.0, noise=0.0):
    pts = np.zeros((n, 3))
    pts[:, 0] = rng.uniform(-spread, spread, n)
    pts[:, 1] = rng.uniform(-spread, spread, n)
    pts[:, 2] = z + (rng.normal(0, noise, n) if noise else 0.0)
    return pts


class TestFitPlane:
    def test_exact_plane_recovered(self):
        rng = np.random.default_rng(0)
        pts = flat_cloud(100, 0.0, rng)
        plane = fit_plane_ransac(pts, RansacParams(rng_seed=1))
        np.testing.assert_allclose(plane.normal, [0, 0, 1], atol=1e-9)
        assert abs(plane.offset) <= 1e-9
        assert plane.inlier_ratio == 1.0

    def test_plane_with_outliers_matches_least_squares(self):
        rng = np.random.default_rng(5)
        inliers = flat_cloud(90, 0.5, rng)
        outliers = flat_cloud(10, 0.0, rng)
        outliers[:, 2] = rng.uniform(1.0, 3.0, 10)
        pts = np.vstack([inliers, outliers])
        params = RansacParams(rng_seed=2)
        plane = fit_plane_ransac(pts, params)
        ref_normal, ref_offset = least_squares_plane(inliers)
        assert plane.inlier_count >= 90
        # offset agrees with the constructed-inlier least-squares fit
        assert abs(plane.offset - ref_offset) <= params.distance_threshold
        assert float(plane.normal @ ref_normal) > 0.999
        np.testing.assert_allclose(plane.normal, [0, 0, 1], atol=1e-6)
        assert abs(plane.offset + 0.5) <= params.distance_threshold

    def test_two_points_degenerate(self):
        with pytest.raises(DegenerateInput):
            fit_plane_ransac(np.array([[0.0, 0, 0], [1, 0, 0]]))

    def test_collinear_points_degenerate(self):
        pts = np.array([[float(i), 2.0 * i, 3.0 * i] for i in range(30)])
        with pytest.raises(DegenerateInput):
            fit_plane_ransac(pts)

    def test_tilt_limit_rejects_steep_plane(self):
        rng = np.random.default_rng(7)
        pts = flat_cloud(200, 0.0, rng)
        tilt = math.radians(30.0)
        c, s = math.cos(tilt), math.sin(tilt)
        rot = np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]])
        tilted = pts @ rot.T
        with pytest.raises(NoPlaneFound):
            fit_plane_ransac(tilted, RansacParams(rng_seed=0,
                                                  max_plane_tilt=math.radians(15)))
        plane = fit_plane_ransac(tilted, RansacParams(rng_seed=0,
                                                      max_plane_tilt=math.radians(45)))
        assert plane.tilt() == pytest.approx(tilt, abs=1e-6)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(9)
        pts = flat_cloud(500, -1.8, rng, noise=0.02)
        pts = np.vstack([pts, rng.uniform(-5, 5, (50, 3))])
        a = fit_plane_ransac(pts, RansacParams(rng_seed=42))
        b = fit_plane_ransac(pts, RansacParams(rng_seed=42))
        np.testing.assert_array_equal(a.normal, b.normal)
        assert a.offset == b.offset
        assert a.inlier_count == b.inlier_count

    def test_tilt_guard_holds_on_returned_plane(self):
        rng = np.random.default_rng(13)
        for seed in range(10):
            pts = flat_cloud(300, -1.8, rng, noise=0.05)
            params = RansacParams(rng_seed=seed)
            plane = fit_plane_ransac(pts, params)
            assert plane.tilt() <= params.max_plane_tilt + 1e-9

    def test_inlier_maximality_vs_exhaustive_triples(self):
        params = RansacParams(max_iterations=300, rng_seed=3,
                              max_plane_tilt=math.radians(89.0))
        rng = np.random.default_rng(21)
        for seed in range(5):
            ground = flat_cloud(35, 0.0, rng, spread=5.0, noise=0.05)
            clutter = rng.uniform(-5, 5, (15, 3))
            pts = np.vstack([ground, clutter])
            plane = fit_plane_ransac(pts, params)
            best = 0
            for i, j, k in itertools.combinations(range(len(pts)), 3):
                n = np.cross(pts[j] - pts[i], pts[k] - pts[i])
                norm = np.linalg.norm(n)
                if norm < 1e-12:
                    continue
                n = n / norm
                d = -n @ pts[i]
                count = int((np.abs(pts @ n + d) <= params.distance_threshold).sum())
                best = max(best, count)
            assert plane.inlier_count >= 0.95 * best


class TestSplitGround:
    def test_points_on_plane_all_ground(self):
        plane = PlaneModel(normal=np.array([0.0, 0, 1]), offset=0.0,
                           inlier_count=4, inlier_ratio=1.0)
        pts = np.array([[0.0, 0, 0], [1, 1, 0], [2, -3, 0], [5, 5, 0]])
        ground, non_ground = split_ground(pts, plane, 0.15)
        assert len(ground) == 4
        assert len(non_ground) == 0

    def test_point_above_threshold_is_non_ground(self):
        plane = PlaneModel(normal=np.array([0.0, 0, 1]), offset=0.0,
                           inlier_count=1, inlier_ratio=1.0)
        ground, non_ground = split_ground(np.array([[0.0, 0, 1.0]]), plane, 0.15)
        assert len(ground) == 0
        assert len(non_ground) == 1

    def test_partition_is_exhaustive_and_disjoint(self):
        rng = np.random.default_rng(17)
        pts = rng.normal(size=(500, 4))
        plane = PlaneModel(normal=np.array([0.0, 0, 1]), offset=0.3,
                           inlier_count=1, inlier_ratio=0.5)
        ground, non_ground = split_ground(pts, plane, 0.2)
        assert len(ground) + len(non_ground) == len(pts)
        merged = np.vstack([ground, non_ground])
        assert np.array_equal(np.sort(merged.view("f8,f8,f8,f8"), axis=0),
                              np.sort(pts.view("f8,f8,f8,f8"), axis=0))

    def test_labeled_synthetic_scene_split(self):
        # plane at z=0 with sigma=0.02 noise, plus a clearly separated box
        rng = np.random.default_rng(23)
        ground_pts = flat_cloud(2000, 0.0, rng, noise=0.02)
        box = np.column_stack([
            rng.uniform(9, 11, 300),
            rng.uniform(-1, 1, 300),
            rng.uniform(0.4, 2.0, 300),
        ])
        pts = np.vstack([ground_pts, box])
        plane = fit_plane_ransac(pts, RansacParams(rng_seed=1))
        ground, non_ground = split_ground(pts, plane, 0.15)
        dist = np.abs(pts @ plane.normal + plane.offset)
        ground_mask = dist <= 0.15
        # every box point ends up non-ground
        assert not ground_mask[2000:].any()
        # at least 99% of constructed ground points are recalled
        assert ground_mask[:2000].mean() >= 0.99
