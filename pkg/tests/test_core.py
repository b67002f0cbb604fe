import math

import numpy as np
import pytest

from lidargrid.core import (
    EmptyFrame,
    ObstacleEstimate,
    Point3,
    PointCloudFrame,
    range_of,
    validate_frame,
)


def make_frame(rows, **kwargs):
    return PointCloudFrame(points=np.array(rows, dtype=float), **kwargs)


class TestValidateFrame:
    def test_all_finite_points_kept(self):
        frame = make_frame([[1, 2, 3, 0.5], [4, 5, 6, 0.1], [7, 8, 9, 0.9]])
        out = validate_frame(frame)
        assert len(out) == 3
        assert out.dropped_points == 0
        np.testing.assert_array_equal(out.points, frame.points)

    def test_nan_point_dropped(self):
        rows = [[float(i), 0.0, 0.0, 0.2] for i in range(10)]
        rows[4][2] = float("nan")
        out = validate_frame(make_frame(rows))
        assert len(out) == 9
        assert out.dropped_points == 1

    def test_all_non_finite_raises(self):
        frame = make_frame([[np.nan, 0, 0, 0], [np.inf, 1, 1, 0]])
        with pytest.raises(EmptyFrame):
            validate_frame(frame)

    def test_eight_bit_intensity_normalized(self):
        out = validate_frame(make_frame([[1, 1, 1, 255.0], [2, 2, 2, 51.0]]),
                             eight_bit_intensity=True)
        np.testing.assert_allclose(out.intensity, [1.0, 0.2])

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        rows = rng.normal(size=(50, 4))
        rows[:, 3] = rng.uniform(0, 1, 50)
        rows[7, 0] = np.inf
        once = validate_frame(make_frame(rows, timestamp=1.5, frame_id=2))
        twice = validate_frame(once)
        assert twice.dropped_points == 0
        assert twice.timestamp == once.timestamp
        assert twice.frame_id == once.frame_id
        np.testing.assert_array_equal(twice.points, once.points)

    def test_metadata_preserved(self):
        out = validate_frame(make_frame([[1, 2, 3, 0]], timestamp=4.2, frame_id=9))
        assert out.timestamp == 4.2
        assert out.frame_id == 9


class TestRangeOf:
    def test_three_four_five(self):
        assert range_of(Point3(3.0, 4.0, 1.0)) == pytest.approx(5.0)

    def test_on_axis(self):
        assert range_of(Point3(0.0, 0.0, 2.0)) == 0.0

    def test_sign_independent(self):
        assert range_of(Point3(-6.0, 8.0, 0.0)) == pytest.approx(10.0)

    def test_invariant_under_z_and_rotation(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            x, y, z = rng.uniform(-50, 50, 3)
            base = range_of(Point3(x, y, z))
            assert abs(range_of(Point3(x, y, rng.uniform(-50, 50))) - base) <= 1e-9
            theta = rng.uniform(0, 2 * math.pi)
            xr = x * math.cos(theta) - y * math.sin(theta)
            yr = x * math.sin(theta) + y * math.cos(theta)
            assert abs(range_of(Point3(xr, yr, z)) - base) <= 1e-9


class TestObstacleEstimate:
    def test_range_derived_from_center(self):
        est = ObstacleEstimate(center_x=3.0, center_y=4.0, length=2.0, width=1.0)
        assert est.range == pytest.approx(5.0, abs=1e-12)

    def test_inconsistent_range_rejected(self):
        with pytest.raises(ValueError):
            ObstacleEstimate(center_x=3.0, center_y=4.0, length=2.0, width=1.0,
                             range=6.0)

    def test_width_over_length_rejected(self):
        with pytest.raises(ValueError):
            ObstacleEstimate(center_x=0.0, center_y=1.0, length=1.0, width=2.0)


class TestFrameContainer:
    def test_xyz_intensity_views(self):
        frame = make_frame([[1, 2, 3, 0.5]])
        np.testing.assert_array_equal(frame.xyz, [[1, 2, 3]])
        np.testing.assert_array_equal(frame.intensity, [0.5])

    def test_point3_sequence_accepted(self):
        frame = PointCloudFrame(points=[Point3(1, 2, 3, 0.4), Point3(4, 5, 6)])
        assert len(frame) == 2
        assert frame.points[1, 3] == 0.0
