"""Trajectory representations and the conversions between them.

A trajectory is stored as a time vector plus an ``(m, 2)`` array of points.
The per-step velocity representation splits each displacement into a
magnitude ("speed", length units per step) and a bearing ("degree"),
measured clockwise from the +y axis toward +x, so that a step of speed
``v`` and bearing ``d`` moves the point by ``(v sin d, v cos d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from pcra.exceptions import ConfigurationError, InvalidTrajectoryError

# Displacements shorter than this are treated as "no motion".
STATIONARY_EPS = 1e-12


class ObjectClass(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"

    @property
    def label(self) -> str:
        return self.value.capitalize()


class Feature(str, Enum):
    SPEED = "speed"
    DEGREE = "degree"


class Point(NamedTuple):
    x: float
    y: float


class VelocityVector(NamedTuple):
    """One step of motion as (magnitude, bearing in degrees).

    ``stationary`` marks a zero-length step; its bearing is 0 by convention
    and carries no directional information.
    """

    speed: float
    degree: float
    stationary: bool = False


def normalize_degrees(degrees):
    """Map bearings into ``[0, 360)``; works on scalars and arrays."""
    d = np.mod(np.asarray(degrees, dtype=float), 360.0)
    # fmod of a tiny negative rounds up to exactly 360
    d = np.where(d >= 360.0, 0.0, d)
    return float(d) if d.ndim == 0 else d


def bearing(dx, dy):
    """Bearing of the displacement ``(dx, dy)`` in ``[0, 360)``."""
    return normalize_degrees(np.degrees(np.arctan2(dx, dy)))


def unwrap_degrees(degrees) -> np.ndarray:
    """Shift successive bearings by multiples of 360 to remove wrap jumps."""
    d = np.asarray(degrees, dtype=float)
    if d.size == 0:
        return d.copy()
    return np.unwrap(d, period=360.0)


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped point sequence of a single object."""

    object_class: ObjectClass
    times: np.ndarray
    points: np.ndarray
    object_id: str = ""

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        points = np.array(self.points, dtype=float).reshape(-1, 2)
        if len(times) != len(points):
            raise InvalidTrajectoryError(
                f"{len(times)} timestamps for {len(points)} points"
            )
        if len(times) < 2:
            raise InvalidTrajectoryError("a trajectory needs at least 2 samples")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(points))):
            raise InvalidTrajectoryError("non-finite time or coordinate")
        if np.any(np.diff(times) <= 0):
            raise InvalidTrajectoryError("timestamps must be strictly increasing")
        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "object_class", ObjectClass(self.object_class))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @classmethod
    def from_samples(
        cls,
        object_class: ObjectClass | str,
        samples: Iterable[tuple[float, Sequence[float]]],
        object_id: str = "",
    ) -> "Trajectory":
        samples = list(samples)
        times = [t for t, _ in samples]
        points = [tuple(p) for _, p in samples]
        return cls(ObjectClass(object_class), np.array(times), np.array(points), object_id)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def samples(self) -> list[tuple[float, Point]]:
        return [(float(t), Point(float(x), float(y))) for t, (x, y) in zip(self.times, self.points)]

    @property
    def start(self) -> Point:
        return Point(float(self.points[0, 0]), float(self.points[0, 1]))

    @property
    def dt(self) -> float:
        """Sampling interval; raises if the trajectory is not uniformly sampled."""
        steps = np.diff(self.times)
        dt = float(np.mean(steps))
        if np.max(np.abs(steps - dt)) > 1e-6 * max(dt, 1.0):
            raise ConfigurationError("trajectory is not uniformly sampled; resample it first")
        return dt

    def with_points(self, points: np.ndarray) -> "Trajectory":
        return Trajectory(self.object_class, self.times, points, self.object_id)


@dataclass(frozen=True)
class Scene:
    """One vehicle and one pedestrian observed over overlapping time spans."""

    scene_id: str
    vehicle: Trajectory
    pedestrian: Trajectory
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.vehicle.object_class is not ObjectClass.VEHICLE:
            raise InvalidTrajectoryError(f"scene {self.scene_id}: vehicle slot holds a {self.vehicle.object_class.value}")
        if self.pedestrian.object_class is not ObjectClass.PEDESTRIAN:
            raise InvalidTrajectoryError(f"scene {self.scene_id}: pedestrian slot holds a {self.pedestrian.object_class.value}")

    def trajectory(self, object_class: ObjectClass | str) -> Trajectory:
        return self.vehicle if ObjectClass(object_class) is ObjectClass.VEHICLE else self.pedestrian

    @property
    def is_interactive(self) -> bool:
        """True when both objects are present at some common instant."""
        lo = max(self.vehicle.times[0], self.pedestrian.times[0])
        hi = min(self.vehicle.times[-1], self.pedestrian.times[-1])
        return lo <= hi + 1e-9


def velocity_components(points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised speed and bearing arrays for a point sequence."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.diff(pts, axis=0)
    speeds = np.hypot(d[:, 0], d[:, 1])
    degrees = np.where(speeds > STATIONARY_EPS, bearing(d[:, 0], d[:, 1]), 0.0)
    return speeds, np.asarray(degrees, dtype=float).reshape(-1)


def points_to_velocities(traj: Trajectory | Sequence[Sequence[float]]) -> list[VelocityVector]:
    """Decompose a trajectory into ``m - 1`` per-step velocity vectors."""
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        raise InvalidTrajectoryError("need at least 2 points to form a velocity")
    speeds, degrees = velocity_components(pts)
    return [
        VelocityVector(float(s), float(d), bool(s <= STATIONARY_EPS))
        for s, d in zip(speeds, degrees)
    ]


def reconstruct_points(start, speeds, degrees) -> np.ndarray:
    """Array form of :func:`velocities_to_points`; returns ``(k, 2)``."""
    s = np.asarray(speeds, dtype=float).reshape(-1)
    theta = np.radians(np.asarray(degrees, dtype=float).reshape(-1))
    steps = np.column_stack([s * np.sin(theta), s * np.cos(theta)])
    return np.asarray(start, dtype=float).reshape(1, 2) + np.cumsum(steps, axis=0)


def velocities_to_points(start: Sequence[float], vels: Sequence[VelocityVector | Sequence[float]]) -> list[Point]:
    """Integrate velocity vectors forward from ``start``; one point per vector."""
    if not np.all(np.isfinite(np.asarray(start, dtype=float))):
        raise InvalidTrajectoryError("non-finite start point")
    if len(vels) == 0:
        return []
    arr = np.array([(v[0], v[1]) for v in vels], dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidTrajectoryError("non-finite velocity")
    pts = reconstruct_points(start, arr[:, 0], arr[:, 1])
    return [Point(float(x), float(y)) for x, y in pts]


def low_pass_smooth(series: Sequence[float], window: int = 3) -> list[float]:
    """Centered moving average whose window shrinks at the edges.

    Each output is the mean of the inputs within ``window // 2`` positions
    (``(window - 1) // 2`` on the left for even windows), truncated to the
    series bounds, so the output has the input's length.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("cannot smooth an empty series")
    window = int(window)
    if window < 1 or window > x.size:
        raise ValueError(f"window must lie in [1, {x.size}], got {window}")
    return _moving_average(x, window).tolist()


def _moving_average(x: np.ndarray, window: int) -> np.ndarray:
    if window == 1:
        return x.copy()
    left, right = (window - 1) // 2, window // 2
    n = x.size
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right, n - 1) + 1
    out = (csum[hi] - csum[lo]) / (hi - lo)
    # keep constant inputs bit-exact despite cumsum rounding
    return np.clip(out, x.min(), x.max())


def smooth_trajectory(traj: Trajectory, window: int = 3) -> Trajectory:
    """Smooth the speed and bearing series, then rebuild the points.

    Bearings of stationary steps are carried forward from the last moving
    step so that the convention value 0 does not leak into the average.
    """
    if window <= 1 or len(traj) < 3:
        return traj
    speeds, degrees = velocity_components(traj.points)
    moving = speeds > STATIONARY_EPS
    if not moving.any():
        return traj
    filled = degrees.copy()
    first = int(np.argmax(moving))
    filled[:first] = degrees[first]
    for i in range(first + 1, len(filled)):
        if not moving[i]:
            filled[i] = filled[i - 1]
    w = min(window, len(speeds))
    sm_speed = _moving_average(speeds, w)
    sm_deg = _moving_average(unwrap_degrees(filled), w)
    pts = np.vstack([traj.points[:1], reconstruct_points(traj.points[0], sm_speed, sm_deg)])
    return traj.with_points(pts)


def shift_to_common_origin(trajs: Sequence[Trajectory]) -> list[Trajectory]:
    """Translate every trajectory so that its first point is the origin."""
    return [t.with_points(t.points - t.points[0]) for t in trajs]


def resample(traj: Trajectory, rate_hz: float) -> Trajectory:
    """Linearly interpolate onto the global grid ``k / rate_hz``.

    Grid instants outside the observed span are dropped, so trajectories of
    different objects resampled at the same rate share timestamps exactly.
    """
    if rate_hz <= 0:
        raise ConfigurationError(f"sample rate must be positive, got {rate_hz}")
    k0 = math.ceil(traj.times[0] * rate_hz - 1e-9)
    k1 = math.floor(traj.times[-1] * rate_hz + 1e-9)
    if k1 - k0 + 1 < 2:
        raise InvalidTrajectoryError(
            f"trajectory {traj.object_id!r} spans fewer than 2 samples at {rate_hz} Hz"
        )
    grid = np.arange(k0, k1 + 1) / rate_hz
    x = np.interp(grid, traj.times, traj.points[:, 0])
    y = np.interp(grid, traj.times, traj.points[:, 1])
    return Trajectory(traj.object_class, grid, np.column_stack([x, y]), traj.object_id)


def horizon_steps(horizon_s: float, dt: float) -> int:
    """Number of whole sampling steps in ``horizon_s``."""
    ratio = horizon_s / dt
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-6:
        raise ConfigurationError(
            f"horizon {horizon_s}s is not a positive whole number of {dt}s steps"
        )
    return steps


def displacement_over_horizon(traj: Trajectory, t_index: int, horizon_s: float) -> VelocityVector | None:
    """Net displacement from sample ``t_index`` to ``horizon_s`` seconds later.

    Returns ``None`` when the trajectory ends before the horizon.
    """
    if not 0 <= t_index < len(traj):
        raise IndexError(f"t_index {t_index} outside trajectory of length {len(traj)}")
    steps = horizon_steps(horizon_s, traj.dt)
    j = t_index + steps
    if j >= len(traj):
        return None
    dx, dy = traj.points[j] - traj.points[t_index]
    mag = float(math.hypot(dx, dy))
    if mag <= STATIONARY_EPS:
        return VelocityVector(mag, 0.0, True)
    return VelocityVector(mag, float(bearing(dx, dy)), False)
