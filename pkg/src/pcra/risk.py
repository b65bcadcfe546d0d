"""Zone/horizon displacement distributions, ECDF confidence bands and sectors.

For each object class the region of interest is cut into equal zones along
the class's travel axis (x for vehicles, y for pedestrians). Every observed
sample inside the region contributes its net displacement over each
look-ahead horizon to the (zone, horizon) cell: the magnitude to the speed
distribution and the bearing to the degree distribution.

A predicted displacement is turned into a risk sector by sliding the cell's
empirical distribution so its mean sits on the prediction, then reading
value bounds off a Dvoretzky-Kiefer-Wolfowitz band around its ECDF.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from pcra.exceptions import ArtifactError, ConfigurationError, NoCoverageError
from pcra.normality import ShapiroResult, shapiro_wilk
from pcra.trajectory import (
    STATIONARY_EPS,
    Feature,
    ObjectClass,
    Point,
    Scene,
    VelocityVector,
    bearing,
    horizon_steps,
)

_LOG = logging.getLogger(__name__)

DISTS_VERSION = "pcra-dists-v1"
DEFAULT_HORIZONS = (1.0, 2.0, 3.0)
DEFAULT_N_MIN = 20


@dataclass(frozen=True)
class ZoneGrid:
    """Equal zones over an axis-aligned region of interest.

    Zones are half-open intervals ``[lo, hi)`` along the class's axis, except
    the last, which also includes the region's far edge.
    """

    roi: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max
    n_zones: int = 12

    def __post_init__(self):
        x0, y0, x1, y1 = (float(v) for v in self.roi)
        if not (x1 > x0 and y1 > y0):
            raise ConfigurationError(f"degenerate region of interest {self.roi}")
        if self.n_zones < 1:
            raise ConfigurationError("n_zones must be positive")
        object.__setattr__(self, "roi", (x0, y0, x1, y1))

    def axis(self, object_class: ObjectClass | str) -> tuple[int, float, float]:
        x0, y0, x1, y1 = self.roi
        if ObjectClass(object_class) is ObjectClass.VEHICLE:
            return 0, x0, x1
        return 1, y0, y1

    def zones_of(self, object_class: ObjectClass | str, points) -> np.ndarray:
        """Zone index (1-based) per point, 0 where the point is outside the region."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x0, y0, x1, y1 = self.roi
        inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
        k, lo, hi = self.axis(object_class)
        idx = np.floor((pts[:, k] - lo) / (hi - lo) * self.n_zones).astype(int)
        idx = np.clip(idx, 0, self.n_zones - 1) + 1
        return np.where(inside, idx, 0)

    def boundaries(self, object_class: ObjectClass | str) -> np.ndarray:
        _, lo, hi = self.axis(object_class)
        return np.linspace(lo, hi, self.n_zones + 1)


def assign_zone(grid: ZoneGrid, object_class: ObjectClass | str, point: Sequence[float]) -> int | None:
    """Zone of a point for the given class, or ``None`` outside the region."""
    z = int(grid.zones_of(object_class, [point])[0])
    return z or None


class DistKey(NamedTuple):
    feature: Feature
    object_class: ObjectClass
    zone: int
    horizon_s: float

    def to_str(self) -> str:
        return f"{self.feature.value}|{self.object_class.value}|{self.zone}|{self.horizon_s:g}"

    @classmethod
    def parse(cls, text: str) -> "DistKey":
        f, c, z, h = text.split("|")
        return cls(Feature(f), ObjectClass(c), int(z), float(h))

    @classmethod
    def make(cls, feature, object_class, zone, horizon_s) -> "DistKey":
        return cls(Feature(feature), ObjectClass(object_class), int(zone), float(horizon_s))


@dataclass(frozen=True)
class EmpiricalDist:
    key: DistKey | None
    samples: np.ndarray
    n_min: int = DEFAULT_N_MIN

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).reshape(-1))
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def usable(self) -> bool:
        return self.n >= max(self.n_min, 1)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))


def ecdf_eval(dist: EmpiricalDist, x):
    """Fraction of samples ``<= x``; accepts scalars or arrays."""
    if dist.n == 0:
        raise NoCoverageError("ECDF of an empty sample")
    r = np.searchsorted(dist.samples, x, side="right") / dist.n
    return float(r) if np.ndim(r) == 0 else r


def dkw_epsilon(n: int, alpha: float) -> float:
    """Half-width ``sqrt(ln(2/alpha) / (2n))`` of the DKW confidence band."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class ConfidenceBand:
    """Simultaneous ``1 - alpha`` band ``[L(x), U(x)]`` around an ECDF."""

    dist: EmpiricalDist
    alpha: float
    epsilon: float

    def ecdf(self, x):
        return ecdf_eval(self.dist, x)

    def lower(self, x):
        return np.maximum(np.asarray(self.ecdf(x)) - self.epsilon, 0.0)

    def upper(self, x):
        return np.minimum(np.asarray(self.ecdf(x)) + self.epsilon, 1.0)


def confidence_band(dist: EmpiricalDist, alpha: float = 0.05) -> ConfidenceBand:
    return ConfidenceBand(dist, alpha, dkw_epsilon(dist.n, alpha))


def _bound_rank(n: int, alpha: float) -> int | None:
    """1-based rank of the upper value bound, ``None`` if the band never gets there."""
    level = 1.0 - alpha / 2.0 + dkw_epsilon(n, alpha)
    if level > 1.0 + 1e-12:
        return None
    return min(n, max(1, math.ceil(n * level - 1e-9)))


def band_bounds(dist: EmpiricalDist, alpha: float = 0.05) -> tuple[float, float]:
    """Conservative value interval implied by the DKW band.

    The upper value is the smallest sample where ``L(x) >= 1 - alpha/2``, the
    lower value mirrors it through ``U(x) <= alpha/2``; when the band is too
    wide to reach those levels the sample extremes are used.
    """
    if not dist.usable:
        raise NoCoverageError(f"distribution {dist.key} has {dist.n} < {dist.n_min} samples")
    x = dist.samples
    k = _bound_rank(dist.n, alpha)
    if k is None:
        return float(x[0]), float(x[-1])
    return float(x[dist.n - k]), float(x[k - 1])


def recenter(dist: EmpiricalDist, predicted_mean: float) -> EmpiricalDist:
    """Translate every sample so the sample mean equals ``predicted_mean``."""
    shifted = dist.samples + (predicted_mean - dist.mean)
    # absorb the rounding residue of the shift
    shifted = shifted + (predicted_mean - float(np.mean(shifted)))
    return EmpiricalDist(dist.key, shifted, dist.n_min)


def normality_test(dist: EmpiricalDist | Sequence[float]) -> ShapiroResult:
    """Shapiro-Wilk diagnostic; ``applicable`` is False outside 3 <= n <= 5000."""
    samples = dist.samples if isinstance(dist, EmpiricalDist) else dist
    return shapiro_wilk(samples)


@dataclass(frozen=True)
class PcraSector:
    """Sector with apex, radius and bearing interval ``[theta_lo, theta_hi]`` in degrees."""

    apex: Point
    radius: float
    theta_lo: float
    theta_hi: float

    def __post_init__(self):
        object.__setattr__(self, "apex", Point(float(self.apex[0]), float(self.apex[1])))
        if self.radius < 0 or not math.isfinite(self.radius):
            raise ValueError(f"sector radius must be finite and >= 0, got {self.radius}")
        if self.theta_hi < self.theta_lo:
            raise ValueError("theta_hi must not be below theta_lo")
        if self.theta_hi - self.theta_lo > 360.0:
            mid = 0.5 * (self.theta_lo + self.theta_hi)
            object.__setattr__(self, "theta_lo", mid - 180.0)
            object.__setattr__(self, "theta_hi", mid + 180.0)

    @property
    def width(self) -> float:
        return self.theta_hi - self.theta_lo

    def contains(self, points) -> np.ndarray:
        """Exact membership test for an ``(k, 2)`` array of points."""
        p = np.asarray(points, dtype=float).reshape(-1, 2) - np.asarray(self.apex)
        r = np.hypot(p[:, 0], p[:, 1])
        if self.width >= 360.0:
            return r <= self.radius
        b = np.degrees(np.arctan2(p[:, 0], p[:, 1]))
        rel = np.mod(b - self.theta_lo, 360.0)
        return (r <= self.radius) & ((rel <= self.width) | (r == 0.0))

    def to_dict(self) -> dict:
        return {
            "apex": [self.apex.x, self.apex.y],
            "radius": self.radius,
            "theta_lo": self.theta_lo,
            "theta_hi": self.theta_hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcraSector":
        return cls(Point(*d["apex"]), d["radius"], d["theta_lo"], d["theta_hi"])


def build_pcra(
    current: Sequence[float],
    predicted: VelocityVector | Sequence[float],
    speed_dist: EmpiricalDist,
    degree_dist: EmpiricalDist,
    alpha: float = 0.05,
) -> PcraSector:
    """Risk sector around a predicted net displacement.

    The radius is the upper speed bound of the recentred speed distribution
    (its lower bound is not used); the bearing interval comes from the
    recentred degree distribution after unwrapping its samples into the
    half-turn on either side of the predicted bearing.
    """
    for d in (speed_dist, degree_dist):
        if not d.usable:
            raise NoCoverageError(f"distribution {d.key} has {d.n} < {d.n_min} samples")
    v_hat, d_hat = float(predicted[0]), float(predicted[1])
    speeds = recenter(speed_dist, v_hat)
    speeds = EmpiricalDist(speeds.key, np.maximum(speeds.samples, 0.0), speeds.n_min)
    radius = band_bounds(speeds, alpha)[1]

    delta = np.mod(degree_dist.samples - d_hat, 360.0)
    delta = np.where(delta > 180.0, delta - 360.0, delta)
    degrees = recenter(EmpiricalDist(degree_dist.key, d_hat + delta, degree_dist.n_min), d_hat)
    lo, hi = band_bounds(degrees, alpha)
    return PcraSector(Point(float(current[0]), float(current[1])), max(radius, 0.0), lo, hi)


@dataclass
class DistributionStore:
    """Frozen collection of per-cell empirical distributions."""

    grid: ZoneGrid
    horizons: tuple[float, ...] = DEFAULT_HORIZONS
    alpha: float = 0.05
    n_min: int = DEFAULT_N_MIN
    dists: dict[DistKey, EmpiricalDist] = field(default_factory=dict)

    def get(self, feature, object_class, zone, horizon_s) -> EmpiricalDist:
        key = DistKey.make(feature, object_class, zone, horizon_s)
        return self.dists.get(key) or EmpiricalDist(key, np.empty(0), self.n_min)

    def usable(self, object_class, zone, horizon_s) -> bool:
        return all(self.get(f, object_class, zone, horizon_s).usable for f in Feature)

    def coverage_gaps(self) -> list[tuple[str, int, float, int]]:
        """Cells (class, zone, horizon, n) whose speed or degree sample is too small."""
        gaps = []
        for cls in ObjectClass:
            for zone in range(1, self.grid.n_zones + 1):
                for h in self.horizons:
                    n = min(self.get(f, cls, zone, h).n for f in Feature)
                    if n < self.n_min:
                        gaps.append((cls.value, zone, h, n))
        return gaps

    def sector(self, object_class, zone, horizon_s, current, predicted: VelocityVector, alpha: float | None = None) -> PcraSector:
        if not zone:
            raise NoCoverageError("object is outside the region of interest")
        return build_pcra(
            current,
            predicted,
            self.get(Feature.SPEED, object_class, zone, horizon_s),
            self.get(Feature.DEGREE, object_class, zone, horizon_s),
            self.alpha if alpha is None else alpha,
        )

    def to_dict(self) -> dict:
        return {
            "version": DISTS_VERSION,
            "grid": {"roi": list(self.grid.roi), "n_zones": self.grid.n_zones},
            "horizons": list(self.horizons),
            "alpha": self.alpha,
            "n_min": self.n_min,
            "dists": {k.to_str(): d.samples.tolist() for k, d in sorted(self.dists.items(), key=lambda kv: kv[0].to_str())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionStore":
        if data.get("version") != DISTS_VERSION:
            raise ArtifactError(f"distribution store version {data.get('version')!r}, expected {DISTS_VERSION!r}")
        grid = ZoneGrid(tuple(data["grid"]["roi"]), int(data["grid"]["n_zones"]))
        n_min = int(data["n_min"])
        dists = {}
        for k, v in data["dists"].items():
            key = DistKey.parse(k)
            dists[key] = EmpiricalDist(key, np.array(v, dtype=float), n_min)
        return cls(grid, tuple(float(h) for h in data["horizons"]), float(data["alpha"]), n_min, dists)


def build_distributions(
    scenes: Iterable[Scene],
    grid: ZoneGrid,
    horizons: Sequence[float] = DEFAULT_HORIZONS,
    n_min: int = DEFAULT_N_MIN,
    alpha: float = 0.05,
) -> DistributionStore:
    """Collect horizon displacements of every in-region sample, per cell.

    Stationary displacements add a zero to the speed cell but nothing to
    the degree cell, since their bearing is undefined.
    """
    speed: dict[DistKey, list[np.ndarray]] = {}
    degree: dict[DistKey, list[np.ndarray]] = {}
    for scene in scenes:
        for traj in (scene.vehicle, scene.pedestrian):
            zones = grid.zones_of(traj.object_class, traj.points)
            if not zones.any():
                continue
            dt = traj.dt
            for h in horizons:
                s = horizon_steps(h, dt)
                if len(traj) <= s:
                    continue
                d = traj.points[s:] - traj.points[:-s]
                z = zones[:-s]
                mag = np.hypot(d[:, 0], d[:, 1])
                brg = bearing(d[:, 0], d[:, 1])
                for zone in np.unique(z[z > 0]):
                    sel = z == zone
                    ks = DistKey.make(Feature.SPEED, traj.object_class, zone, h)
                    speed.setdefault(ks, []).append(mag[sel])
                    moving = sel & (mag > STATIONARY_EPS)
                    if moving.any():
                        kd = DistKey.make(Feature.DEGREE, traj.object_class, zone, h)
                        degree.setdefault(kd, []).append(np.atleast_1d(brg)[moving])
    dists = {}
    for bucket in (speed, degree):
        for key, parts in bucket.items():
            dists[key] = EmpiricalDist(key, np.concatenate(parts), n_min)
    store = DistributionStore(grid, tuple(float(h) for h in horizons), alpha, n_min, dists)
    gaps = store.coverage_gaps()
    if gaps:
        _LOG.info("%d (class, zone, horizon) cells below n_min=%d", len(gaps), n_min)
    return store


class ZoneDistributions(BaseEstimator):
    """Estimator form of :func:`build_distributions`.

    ``fit`` takes a list of scenes and leaves the frozen store in ``store_``.
    """

    def __init__(self, roi=(0.0, 0.0, 1.0, 1.0), n_zones: int = 12, horizons=DEFAULT_HORIZONS, n_min: int = DEFAULT_N_MIN, alpha: float = 0.05):
        self.roi = roi
        self.n_zones = n_zones
        self.horizons = horizons
        self.n_min = n_min
        self.alpha = alpha

    def fit(self, scenes, y=None):
        self.store_ = build_distributions(scenes, ZoneGrid(tuple(self.roi), self.n_zones), self.horizons, self.n_min, self.alpha)
        return self

    def sector(self, object_class, point, horizon_s, predicted: VelocityVector) -> PcraSector:
        check_is_fitted(self, "store_")
        zone = assign_zone(self.store_.grid, object_class, point)
        return self.store_.sector(object_class, zone, horizon_s, point, predicted)
