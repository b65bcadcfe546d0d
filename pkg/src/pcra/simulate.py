"""Synthetic crosswalk scenes with known conflict timing.

Each scene has one vehicle driving along the lane (+x) through the region
of interest and one pedestrian crossing it (-y) at the crosswalk. The
pedestrian's arrival at the lane is offset from the vehicle's arrival at the
crossing point by a drawn amount, so the label (the arrival-time gap at
the path crossing) is known by construction. Optionally the vehicle yields:
it brakes to a stop before the crosswalk and waits for the pedestrian to
clear the lane.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from pcra.trajectory import ObjectClass, Scene, Trajectory


@dataclass(frozen=True)
class SimSpec:
    n_scenes: int = 200
    vehicle_speed: tuple[float, float] = (8.0, 12.0)
    pedestrian_speed: tuple[float, float] = (1.0, 1.6)
    yield_probability: float = 0.0
    crossing_offset: tuple[float, float] = (-8.0, 8.0)  # pedestrian minus vehicle arrival, seconds
    noise: float = 0.05
    frame_rate_hz: float = 10.0
    crossing_x: float = 0.0
    crossing_jitter: float = 1.5
    heading_jitter_deg: float = 8.0
    lane_y: float = 0.0
    lane_jitter: float = 0.3
    parallel_paths: bool = False
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.vehicle_speed, self.pedestrian_speed):
            if not 0 < lo <= hi:
                raise ValueError("speed ranges must be positive and ordered")
        if not 0.0 <= self.yield_probability <= 1.0:
            raise ValueError("yield_probability must lie in [0, 1]")
        if self.crossing_offset[0] > self.crossing_offset[1]:
            raise ValueError("crossing_offset range is reversed")
        if self.noise < 0 or self.frame_rate_hz <= 0 or self.n_scenes < 0:
            raise ValueError("noise, frame rate and scene count must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SceneLabel:
    scene_id: str
    min_gap_s: float | None  # None: the paths never cross
    offset_s: float
    yielded: bool
    vehicle_speed: float
    pedestrian_speed: float

    @property
    def conflict(self) -> bool:
        return self.min_gap_s is not None

    def to_dict(self) -> dict:
        return asdict(self)


_DECEL = 3.0  # m/s^2 braking and re-acceleration when yielding
_STOP_MARGIN = 4.0  # stop line distance before the crossing point


def _vehicle_track(x0, v0, times, x_stop=None, release=None):
    """Positions along x; with ``x_stop`` the vehicle brakes to stop there until ``release``."""
    if x_stop is None:
        return x0 + v0 * times
    brake_dist = v0 * v0 / (2 * _DECEL)
    t_brake = (x_stop - brake_dist - x0) / v0
    t_stop = t_brake + v0 / _DECEL
    release = max(release, t_stop)
    t_go_full = release + v0 / _DECEL
    x = np.empty_like(times)
    for k, t in enumerate(times):
        if t <= t_brake:
            x[k] = x0 + v0 * t
        elif t <= t_stop:
            u = t - t_brake
            x[k] = x_stop - brake_dist + v0 * u - 0.5 * _DECEL * u * u
        elif t <= release:
            x[k] = x_stop
        elif t <= t_go_full:
            u = t - release
            x[k] = x_stop + 0.5 * _DECEL * u * u
        else:
            x[k] = x_stop + 0.5 * v0 * v0 / _DECEL + v0 * (t - t_go_full)
    return x


def _crossing_time(times, values, level):
    """First time a monotone-ish track passes ``level`` (linear interpolation)."""
    s = values - level
    idx = np.nonzero(np.sign(s[:-1]) != np.sign(s[1:]))[0]
    if len(idx) == 0:
        hit = np.nonzero(s == 0)[0]
        return float(times[hit[0]]) if len(hit) else None
    i = idx[0]
    return float(times[i] + (times[i + 1] - times[i]) * s[i] / (s[i] - s[i + 1]))


def simulate(spec: SimSpec, roi=(-60.0, -12.0, 60.0, 12.0)) -> tuple[list[Scene], list[SceneLabel]]:
    """Generate ``spec.n_scenes`` scenes and their ground-truth labels."""
    rng = np.random.default_rng(spec.seed)
    x_min, y_min, x_max, y_max = roi
    dt = 1.0 / spec.frame_rate_hz
    scenes, labels = [], []
    for k in range(spec.n_scenes):
        sid = f"sim-{spec.seed}-{k:04d}"
        v0 = rng.uniform(*spec.vehicle_speed)
        vp = rng.uniform(*spec.pedestrian_speed)
        offset = rng.uniform(*spec.crossing_offset)
        lane_y = spec.lane_y + rng.uniform(-spec.lane_jitter, spec.lane_jitter)
        x_cross = spec.crossing_x + rng.uniform(-spec.crossing_jitter, spec.crossing_jitter)
        psi = math.radians(rng.uniform(-spec.heading_jitter_deg, spec.heading_jitter_deg))
        yields = rng.random() < spec.yield_probability
        noise_seed = rng.integers(2**32)

        x0 = x_min - 5.0
        t_v = (x_cross - x0) / v0  # nominal vehicle arrival at the crossing point
        t_p = t_v + offset
        y_start, y_end = y_max - 1.0, y_min - 1.0
        vy, vx = -vp * math.cos(psi), vp * math.sin(psi)
        if spec.parallel_paths:
            # stroll along the far sidewalk, never entering the lane
            p_t0 = t_p - 8.0
            p_dur = 16.0
        else:
            p_t0 = t_p - (y_start - lane_y) / vp / math.cos(psi)
            p_dur = (y_start - y_end) / (vp * math.cos(psi))
        t_lo = min(0.0, p_t0)
        t_v_end = (x_max + 5.0 - x0) / v0
        t_hi = max(t_v_end + (15.0 if yields else 0.0), p_t0 + p_dur)
        grid = np.arange(math.floor(t_lo / dt), math.ceil(t_hi / dt) + 1) * dt

        tp = grid[(grid >= p_t0) & (grid <= p_t0 + p_dur)]
        if spec.parallel_paths:
            px = x_cross - 0.5 * vp * 16.0 + vp * (tp - p_t0)
            py = np.full_like(tp, y_start)
        else:
            x_start = x_cross - vx * (t_p - p_t0)
            px = x_start + vx * (tp - p_t0)
            py = y_start + vy * (tp - p_t0)

        x_stop = release = None
        if yields and not spec.parallel_paths:
            # wait until the pedestrian is 1 m past the lane
            clear = p_t0 + (y_start - (lane_y - 1.0)) / (vp * math.cos(psi))
            x_stop, release = x_cross - _STOP_MARGIN, clear
        tv_all = grid[grid >= 0.0]
        vx_track = _vehicle_track(x0, v0, tv_all, x_stop, release)
        keep = vx_track <= x_max + 5.0
        tv, vxs = tv_all[keep], vx_track[keep]
        vys = np.full_like(tv, lane_y)

        if spec.parallel_paths:
            gap = None
        else:
            tv_cross = _crossing_time(tv, vxs, x_cross)
            tp_cross = _crossing_time(tp, py, lane_y)
            gap = abs(tv_cross - tp_cross) if tv_cross is not None and tp_cross is not None else None

        nrng = np.random.default_rng(noise_seed)
        vpts = np.column_stack([vxs, vys]) + nrng.normal(0.0, spec.noise, (len(tv), 2))
        ppts = np.column_stack([px, py]) + nrng.normal(0.0, spec.noise, (len(tp), 2))
        shift = -grid[0]
        scenes.append(
            Scene(
                sid,
                Trajectory(ObjectClass.VEHICLE, tv + shift, vpts, f"{sid}-v"),
                Trajectory(ObjectClass.PEDESTRIAN, tp + shift, ppts, f"{sid}-p"),
            )
        )
        labels.append(SceneLabel(sid, gap, float(offset), bool(yields and x_stop is not None), float(v0), float(vp)))
    return scenes, labels
