import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcra.exceptions import ConfigurationError, InvalidTrajectoryError
from pcra.trajectory import (
    ObjectClass,
    Point,
    Scene,
    Trajectory,
    VelocityVector,
    displacement_over_horizon,
    low_pass_smooth,
    points_to_velocities,
    resample,
    shift_to_common_origin,
    smooth_trajectory,
    velocities_to_points,
)


def traj(points, dt=0.2, cls=ObjectClass.VEHICLE):
    pts = np.asarray(points, dtype=float)
    return Trajectory(cls, np.arange(len(pts)) * dt, pts)


coords = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
point_lists = st.lists(st.tuples(coords, coords), min_size=2, max_size=40)


class TestPointsToVelocities:
    def test_motion_along_y(self):
        assert points_to_velocities(traj([(0, 0), (0, 1)])) == [VelocityVector(1.0, 0.0, False)]

    def test_motion_along_x(self):
        (v,) = points_to_velocities(traj([(0, 0), (1, 0)]))
        assert v.speed == 1.0
        assert v.degree == pytest.approx(90.0, abs=1e-12)

    def test_three_four_five(self):
        (v,) = points_to_velocities(traj([(0, 0), (3, 4)]))
        assert v.speed == pytest.approx(5.0, abs=1e-12)
        assert v.degree == pytest.approx(math.degrees(math.atan2(3, 4)), abs=1e-9)
        assert v.degree == pytest.approx(36.8699, abs=1e-4)
        (p,) = velocities_to_points((0, 0), [v])
        assert p.x == pytest.approx(3.0, abs=1e-9)
        assert p.y == pytest.approx(4.0, abs=1e-9)

    def test_westward_bearing_is_positive(self):
        (v,) = points_to_velocities(traj([(0, 0), (-1, 0)]))
        assert v.degree == pytest.approx(270.0)

    def test_stationary_step_flagged(self):
        (v,) = points_to_velocities([(2, 2), (2, 2)])
        assert v == VelocityVector(0.0, 0.0, True)

    def test_too_few_points(self):
        with pytest.raises(InvalidTrajectoryError):
            points_to_velocities([(0, 0)])


class TestVelocitiesToPoints:
    def test_southward_step(self):
        (p,) = velocities_to_points((2, 3), [(2, 180)])
        assert p.x == pytest.approx(2.0, abs=1e-12)
        assert p.y == pytest.approx(1.0, abs=1e-12)

    def test_empty(self):
        assert velocities_to_points((0, 0), []) == []

    def test_repeated_steps(self):
        pts = velocities_to_points((0, 0), [(1, 90), (1, 90)])
        np.testing.assert_allclose(pts, [(1, 0), (2, 0)], atol=1e-12)

    def test_non_finite(self):
        with pytest.raises(InvalidTrajectoryError):
            velocities_to_points((0, float("nan")), [(1, 0)])


@settings(max_examples=200, deadline=None)
@given(point_lists)
def test_roundtrip_and_norm(points):
    pts = np.asarray(points)
    vels = points_to_velocities(pts)
    back = np.asarray(velocities_to_points(tuple(pts[0]), vels))
    np.testing.assert_allclose(back, pts[1:], rtol=0, atol=1e-9)
    d = np.diff(pts, axis=0)
    speeds = np.array([v.speed for v in vels])
    np.testing.assert_allclose(speeds ** 2, d[:, 0] ** 2 + d[:, 1] ** 2, rtol=1e-12, atol=1e-9)
    assert all(0.0 <= v.degree < 360.0 for v in vels)


class TestSmoothing:
    def test_constant(self):
        assert low_pass_smooth([5, 5, 5, 5], 3) == [5, 5, 5, 5]

    def test_spike(self):
        # oracle: direct average over the truncated centred window
        series = [0, 0, 9, 0, 0]
        expected = [np.mean(series[max(0, i - 1):i + 2]) for i in range(5)]
        assert expected == [0, 3, 3, 3, 0]
        np.testing.assert_allclose(low_pass_smooth(series, 3), expected)

    def test_window_one_identity(self):
        s = [1.5, -2.0, 7.25]
        assert low_pass_smooth(s, 1) == s

    def test_empty_series(self):
        with pytest.raises(ValueError):
            low_pass_smooth([], 3)

    def test_window_longer_than_series(self):
        with pytest.raises(ValueError):
            low_pass_smooth([1, 2], 3)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(coords, min_size=1, max_size=60), st.integers(1, 9))
    def test_convex_combination(self, series, window):
        window = min(window, len(series))
        out = np.array(low_pass_smooth(series, window))
        assert len(out) == len(series)
        assert out.min() >= min(series) - 1e-9
        assert out.max() <= max(series) + 1e-9

    def test_smooth_trajectory_keeps_straight_line(self):
        t = traj([(i, 2 * i) for i in range(10)])
        np.testing.assert_allclose(smooth_trajectory(t, 3).points, t.points, atol=1e-9)


class TestShift:
    def test_translation(self):
        (out,) = shift_to_common_origin([traj([(3, 3), (4, 3)])])
        np.testing.assert_array_equal(out.points, [(0, 0), (1, 0)])

    def test_already_at_origin(self):
        t = traj([(0, 0), (1, 1), (2, 0)])
        (out,) = shift_to_common_origin([t])
        np.testing.assert_array_equal(out.points, t.points)

    def test_distances_preserved(self):
        a = traj([(10, -4), (11, -2), (13, 0)])
        b = traj([(-7, 2), (-7, 5), (-3, 8)])
        for before, after in zip([a, b], shift_to_common_origin([a, b])):
            assert tuple(after.points[0]) == (0.0, 0.0)
            np.testing.assert_allclose(
                np.hypot(*np.diff(after.points, axis=0).T), np.hypot(*np.diff(before.points, axis=0).T)
            )


class TestDisplacement:
    def test_straight_motion(self):
        t = traj([(i, 0) for i in range(20)], dt=0.2)
        v = displacement_over_horizon(t, 2, 1.0)
        # 5 steps of 1 unit along +x
        assert v.speed == pytest.approx(5.0)
        assert v.degree == pytest.approx(90.0)

    def test_stationary(self):
        t = traj([(1, 1)] * 10)
        assert displacement_over_horizon(t, 0, 1.0) == VelocityVector(0.0, 0.0, True)

    def test_out_of_support(self):
        t = traj([(i, 0) for i in range(10)])
        assert displacement_over_horizon(t, 9, 1.0) is None
        assert displacement_over_horizon(t, 5, 1.0) is None
        assert displacement_over_horizon(t, 4, 1.0) is not None

    def test_non_integral_horizon(self):
        t = traj([(i, 0) for i in range(10)], dt=0.3)
        with pytest.raises(ConfigurationError):
            displacement_over_horizon(t, 0, 1.0)


class TestTrajectoryAndResample:
    def test_invariants(self):
        with pytest.raises(InvalidTrajectoryError):
            Trajectory(ObjectClass.VEHICLE, [0.0], [(0, 0)])
        with pytest.raises(InvalidTrajectoryError):
            Trajectory(ObjectClass.VEHICLE, [0.0, 0.0], [(0, 0), (1, 1)])
        with pytest.raises(InvalidTrajectoryError):
            Trajectory(ObjectClass.VEHICLE, [0.0, 1.0], [(0, 0), (1, np.inf)])

    def test_samples_view(self):
        t = traj([(0, 0), (1, 2)])
        assert t.samples == [(0.0, Point(0.0, 0.0)), (0.2, Point(1.0, 2.0))]

    def test_resample_linear(self):
        t = Trajectory(ObjectClass.PEDESTRIAN, [0.05, 0.55, 1.05], [(0, 0), (1, 0), (2, 0)])
        r = resample(t, 5.0)
        np.testing.assert_allclose(r.times, [0.2, 0.4, 0.6, 0.8, 1.0])
        np.testing.assert_allclose(r.points[:, 0], [0.3, 0.7, 1.1, 1.5, 1.9])
        assert r.dt == pytest.approx(0.2)

    def test_scene_interactivity(self):
        v = traj([(0, 0), (1, 0)])
        p = Trajectory(ObjectClass.PEDESTRIAN, [5.0, 6.0], [(0, 0), (0, 1)])
        assert not Scene("s", v, p).is_interactive
        p2 = Trajectory(ObjectClass.PEDESTRIAN, [0.2, 1.0], [(0, 0), (0, 1)])
        assert Scene("s", v, p2).is_interactive

    def test_scene_slots_checked(self):
        with pytest.raises(InvalidTrajectoryError):
            Scene("s", traj([(0, 0), (1, 0)], cls=ObjectClass.PEDESTRIAN), traj([(0, 0), (1, 0)], cls=ObjectClass.PEDESTRIAN))
