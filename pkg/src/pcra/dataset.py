"""Training material: scaling, sliding windows and scene-level splits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from pcra.exceptions import ConfigurationError, DegenerateScalerError
from pcra.trajectory import Feature, ObjectClass, Scene, Trajectory, unwrap_degrees, velocity_components

_LOG = logging.getLogger(__name__)


def fit_scaler(samples: Sequence[float]) -> tuple[float, float]:
    """Return ``(min, max)`` of the samples for min-max scaling."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    x = x[np.isfinite(x)]
    if x.size < 2 or x.min() == x.max():
        raise DegenerateScalerError("min-max scaling needs at least 2 distinct values")
    return float(x.min()), float(x.max())


class RangeScaler(TransformerMixin, BaseEstimator):
    """Min-max scaler onto ``[0, 1]`` that clips out-of-range inputs.

    Unlike :class:`sklearn.preprocessing.MinMaxScaler` it pools every column
    into one range (window entries and targets share a scale) and counts
    the values it had to clip in ``n_clipped_``.
    """

    def __init__(self, clip: bool = True):
        self.clip = clip

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=float).reshape(-1)
        if y is not None:
            values = np.concatenate([values, np.asarray(y, dtype=float).reshape(-1)])
        self.data_min_, self.data_max_ = fit_scaler(values)
        self.n_clipped_ = 0
        return self

    @classmethod
    def from_range(cls, lo: float, hi: float, clip: bool = True) -> "RangeScaler":
        if not hi > lo:
            raise DegenerateScalerError(f"scaler range must satisfy min < max, got ({lo}, {hi})")
        s = cls(clip=clip)
        s.data_min_, s.data_max_, s.n_clipped_ = float(lo), float(hi), 0
        return s

    @property
    def span(self) -> float:
        return self.data_max_ - self.data_min_

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        z = (np.asarray(X, dtype=float) - self.data_min_) / self.span
        if self.clip:
            outside = (z < 0.0) | (z > 1.0)
            if outside.any():
                self.n_clipped_ += int(outside.sum())
                z = np.clip(z, 0.0, 1.0)
        return z

    def inverse_transform(self, Z):
        check_is_fitted(self, "data_min_")
        return np.asarray(Z, dtype=float) * self.span + self.data_min_


def feature_series(traj: Trajectory, feature: Feature | str) -> np.ndarray:
    """Per-step speed series, or the unwrapped bearing series, of a trajectory."""
    speeds, degrees = velocity_components(traj.points)
    if Feature(feature) is Feature.SPEED:
        return speeds
    moving = speeds > 0
    if moving.any() and not moving.all():
        # carry bearings across stationary steps before unwrapping
        first = int(np.argmax(moving))
        degrees = degrees.copy()
        degrees[:first] = degrees[first]
        for i in range(first + 1, len(degrees)):
            if not moving[i]:
                degrees[i] = degrees[i - 1]
    return unwrap_degrees(degrees)


def sliding_windows(series: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """All contiguous ``(window, next value)`` pairs of one series."""
    series = np.asarray(series, dtype=float)
    n = len(series) - window
    if n <= 0:
        return np.empty((0, window)), np.empty(0)
    X = np.lib.stride_tricks.sliding_window_view(series, window)[:n].copy()
    return X, series[window:].copy()


@dataclass(frozen=True)
class WindowSample:
    scene_id: str
    feature: Feature
    object_class: ObjectClass
    window: tuple[float, ...]
    target: float


def window_arrays(
    scenes: Sequence[Scene],
    feature: Feature | str,
    object_class: ObjectClass | str,
    window: int = 3,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Raw-unit windows for one (feature, class) over many scenes.

    Returns ``(X, y, scene_ids)`` with one scene id per row. Trajectories too
    short to yield a window are counted and logged at debug level.
    """
    Xs, ys, ids = [], [], []
    short = 0
    for scene in scenes:
        series = feature_series(scene.trajectory(object_class), feature)
        X, y = sliding_windows(series, window)
        if len(y) == 0:
            short += 1
            continue
        Xs.append(X)
        ys.append(y)
        ids.extend([scene.scene_id] * len(y))
    if short:
        _LOG.debug("%d trajectories shorter than window+1 contributed no samples", short)
    if not Xs:
        return np.empty((0, window)), np.empty(0), []
    return np.vstack(Xs), np.concatenate(ys), ids


def extract_windows(
    scenes: Sequence[Scene],
    feature: Feature | str,
    object_class: ObjectClass | str,
    window: int = 3,
    scaler: RangeScaler | None = None,
) -> list[WindowSample]:
    """Normalised sliding-window samples for one (feature, class).

    When no fitted ``scaler`` is given, one is fitted on the extracted values.
    """
    feature, object_class = Feature(feature), ObjectClass(object_class)
    X, y, ids = window_arrays(scenes, feature, object_class, window)
    if len(y) == 0:
        return []
    if scaler is None:
        scaler = RangeScaler().fit(X, y)
    Xn, yn = scaler.transform(X), scaler.transform(y)
    return [
        WindowSample(sid, feature, object_class, tuple(float(v) for v in row), float(t))
        for sid, row, t in zip(ids, Xn, yn)
    ]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    chronological: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_scenes(scenes: Sequence, spec: SplitSpec = SplitSpec()) -> tuple[list, list]:
    """Partition whole scenes into train and test lists.

    The train side gets ``ceil(train_fraction * n)`` scenes. With
    ``chronological`` the input order is kept, otherwise a seeded
    permutation is drawn and each side keeps input order.
    """
    n = len(scenes)
    if n == 0:
        raise ValueError("cannot split an empty scene list")
    # guard against 0.7 * 10 == 7.000000000000001
    n_train = min(n, math.ceil(spec.train_fraction * n - 1e-9))
    if spec.chronological:
        order = np.arange(n)
    else:
        order = np.random.default_rng(spec.seed).permutation(n)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    return [scenes[i] for i in train_idx], [scenes[i] for i in test_idx]
