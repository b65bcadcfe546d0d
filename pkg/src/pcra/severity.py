"""Danger / warning / relative-safe classification from sector overlap."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

from pcra.dataset import feature_series
from pcra.exceptions import NoCoverageError
from pcra.geometry import DEFAULT_ARC_SEGMENTS, sectors_overlap
from pcra.lstm import LstmModel, forecast
from pcra.risk import DistributionStore, PcraSector
from pcra.trajectory import Feature, ObjectClass, Scene, VelocityVector, bearing, horizon_steps

_LOG = logging.getLogger(__name__)

ASSESSMENT_VERSION = "pcra-assessment-v1"
REPORT_VERSION = "pcra-report-v1"

ModelSet = Mapping[tuple[ObjectClass, Feature], LstmModel]


class SeverityLevel(IntEnum):
    RELATIVE_SAFE = 0
    WARNING = 1
    DANGER = 2

    @property
    def label(self) -> str:
        return {0: "relative_safe", 1: "warning", 2: "danger"}[int(self)]

    @classmethod
    def from_label(cls, text: str) -> "SeverityLevel":
        return {"relative_safe": cls.RELATIVE_SAFE, "warning": cls.WARNING, "danger": cls.DANGER}[text]


@dataclass(frozen=True)
class OverlapFlags:
    """Overlap outcome per horizon; ``None`` marks an indeterminate horizon."""

    flags: tuple[bool | None, ...]

    @classmethod
    def of(cls, *flags: bool | None) -> "OverlapFlags":
        return cls(tuple(flags))

    def _at(self, k: int) -> bool | None:
        return self.flags[k] if k < len(self.flags) else None

    t1 = property(lambda self: self._at(0))
    t2 = property(lambda self: self._at(1))
    t3 = property(lambda self: self._at(2))

    @property
    def indeterminate(self) -> tuple[int, ...]:
        return tuple(k for k, f in enumerate(self.flags) if f is None)


def classify_timestep(flags: OverlapFlags) -> SeverityLevel:
    """Danger on first-horizon overlap, else warning on second, else relative safe.

    Indeterminate horizons count as no overlap.
    """
    if flags.t1:
        return SeverityLevel.DANGER
    if flags.t2:
        return SeverityLevel.WARNING
    return SeverityLevel.RELATIVE_SAFE


@dataclass(frozen=True)
class TimestepRecord:
    time_s: float
    vehicle_sectors: tuple[PcraSector | None, ...]
    pedestrian_sectors: tuple[PcraSector | None, ...]
    flags: OverlapFlags
    severity: SeverityLevel

    def to_dict(self) -> dict:
        return {
            "time_s": self.time_s,
            "severity": self.severity.label,
            "flags": list(self.flags.flags),
            "vehicle_sectors": [s.to_dict() if s else None for s in self.vehicle_sectors],
            "pedestrian_sectors": [s.to_dict() if s else None for s in self.pedestrian_sectors],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TimestepRecord":
        def sectors(items):
            return tuple(PcraSector.from_dict(s) if s else None for s in items)

        return cls(
            float(d["time_s"]),
            sectors(d["vehicle_sectors"]),
            sectors(d["pedestrian_sectors"]),
            OverlapFlags(tuple(d["flags"])),
            SeverityLevel.from_label(d["severity"]),
        )


@dataclass(frozen=True)
class SceneAssessment:
    scene_id: str
    records: tuple[TimestepRecord, ...] = ()
    horizons: tuple[float, ...] = (1.0, 2.0, 3.0)
    skip_reason: str | None = None

    @property
    def skipped(self) -> bool:
        return self.skip_reason is not None

    @property
    def verdict(self) -> SeverityLevel | None:
        if self.skipped:
            return None
        return max((r.severity for r in self.records), default=SeverityLevel.RELATIVE_SAFE)

    def worst_record(self) -> TimestepRecord | None:
        """First timestep at the scene's verdict level."""
        for r in self.records:
            if r.severity == self.verdict:
                return r
        return None

    def to_dict(self) -> dict:
        return {
            "version": ASSESSMENT_VERSION,
            "scene_id": self.scene_id,
            "verdict": self.verdict.label if self.verdict is not None else None,
            "skipped": self.skipped,
            "skip_reason": self.skip_reason,
            "horizons": list(self.horizons),
            "timesteps": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneAssessment":
        return cls(
            str(d["scene_id"]),
            tuple(TimestepRecord.from_dict(r) for r in d["timesteps"]),
            tuple(float(h) for h in d["horizons"]),
            d.get("skip_reason"),
        )


def _frames(times: np.ndarray, dt: float) -> np.ndarray:
    return np.round(times / dt).astype(np.int64)


def _predicted_displacements(models: ModelSet, cls: ObjectClass, traj, idx: np.ndarray, steps: Sequence[int]):
    """Net predicted displacement vectors ``(len(idx), len(steps), 2)``."""
    ms, md = models[(cls, Feature.SPEED)], models[(cls, Feature.DEGREE)]
    w = max(ms.config.window, md.config.window)
    speeds = feature_series(traj, Feature.SPEED)
    degrees = feature_series(traj, Feature.DEGREE)
    # velocity k joins points k and k+1, so point i has i velocities behind it
    hist_s = np.vstack([speeds[i - w:i] for i in idx])
    hist_d = np.vstack([degrees[i - w:i] for i in idx])
    n = max(steps)
    ps = np.maximum(forecast(ms, hist_s, n), 0.0)
    th = np.radians(forecast(md, hist_d, n))
    cum = np.stack([np.cumsum(ps * np.sin(th), axis=1), np.cumsum(ps * np.cos(th), axis=1)], axis=-1)
    return cum[:, [s - 1 for s in steps], :]


def assess_scene(
    scene: Scene,
    models: ModelSet,
    store: DistributionStore,
    alpha: float | None = None,
    arc_segments: int = DEFAULT_ARC_SEGMENTS,
) -> SceneAssessment:
    """Severity of every concurrent in-region timestep of one scene.

    At each timestep where both objects are inside the region and have at
    least one window of velocity history, each object's speed/degree
    networks are rolled out to the longest horizon; the net predicted
    displacement at each horizon is turned into a sector from the
    (zone, horizon) distributions and the two objects' sectors are tested
    for overlap. Cells without enough samples leave that horizon
    indeterminate.
    """
    horizons = tuple(store.horizons)
    veh, ped = scene.vehicle, scene.pedestrian
    dt = veh.dt
    steps = [horizon_steps(h, dt) for h in horizons]
    fv, fp = _frames(veh.times, dt), _frames(ped.times, dt)
    common, iv, ip = np.intersect1d(fv, fp, return_indices=True)
    if len(common) == 0:
        return SceneAssessment(scene.scene_id, (), horizons, "objects never present at the same time")
    zv = store.grid.zones_of(ObjectClass.VEHICLE, veh.points[iv])
    zp = store.grid.zones_of(ObjectClass.PEDESTRIAN, ped.points[ip])
    inside = (zv > 0) & (zp > 0)
    if not inside.any():
        return SceneAssessment(scene.scene_id, (), horizons, "objects never concurrently in region of interest")
    w = max(m.config.window for m in models.values())
    ok = inside & (iv >= w) & (ip >= w)
    if not ok.any():
        return SceneAssessment(scene.scene_id, (), horizons, "not enough observed history inside region of interest")
    iv, ip, zv, zp = iv[ok], ip[ok], zv[ok], zp[ok]
    disp_v = _predicted_displacements(models, ObjectClass.VEHICLE, veh, iv, steps)
    disp_p = _predicted_displacements(models, ObjectClass.PEDESTRIAN, ped, ip, steps)

    def sector(cls, zone, h, point, d):
        pred = VelocityVector(float(np.hypot(*d)), float(bearing(d[0], d[1])))
        try:
            return store.sector(cls, int(zone), h, point, pred, alpha)
        except NoCoverageError:
            return None

    records = []
    for r in range(len(iv)):
        vs, ps, flags = [], [], []
        for k, h in enumerate(horizons):
            a = sector(ObjectClass.VEHICLE, zv[r], h, veh.points[iv[r]], disp_v[r, k])
            b = sector(ObjectClass.PEDESTRIAN, zp[r], h, ped.points[ip[r]], disp_p[r, k])
            vs.append(a)
            ps.append(b)
            flags.append(None if a is None or b is None else sectors_overlap(a, b, arc_segments))
        of = OverlapFlags(tuple(flags))
        records.append(TimestepRecord(float(veh.times[iv[r]]), tuple(vs), tuple(ps), of, classify_timestep(of)))
    return SceneAssessment(scene.scene_id, tuple(records), horizons)


@dataclass
class CorpusCounts:
    site_id: str = ""
    total: int = 0
    danger: int = 0
    warning: int = 0
    relative_safe: int = 0
    skipped: int = 0
    skip_reasons: dict[str, int] = field(default_factory=dict)

    @property
    def danger_ratio(self) -> float:
        return self.danger / self.total if self.total else 0.0

    @property
    def warning_ratio(self) -> float:
        return self.warning / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "total_scenes": self.total,
            "dangerous_scenes": self.danger,
            "warning_scenes": self.warning,
            "relative_safe_scenes": self.relative_safe,
            "skipped_scenes": self.skipped,
            "danger_ratio": round(self.danger_ratio, 3),
            "warning_ratio": round(self.warning_ratio, 3),
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
        }


def aggregate_corpus(assessments: Sequence[SceneAssessment], site_id: str = "") -> CorpusCounts:
    """Scene counts per verdict; ratios are taken over all scenes, skipped included."""
    counts = CorpusCounts(site_id=site_id)
    for a in assessments:
        counts.total += 1
        v = a.verdict
        if v is None:
            counts.skipped += 1
            counts.skip_reasons[a.skip_reason] = counts.skip_reasons.get(a.skip_reason, 0) + 1
        elif v is SeverityLevel.DANGER:
            counts.danger += 1
        elif v is SeverityLevel.WARNING:
            counts.warning += 1
        else:
            counts.relative_safe += 1
    return counts


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out) + "\n"


def format_risk_table(counts: Sequence[CorpusCounts]) -> str:
    """Per-site scene counts: total, dangerous, warning (with ratios)."""
    header = ["Target spot", "# of total scenes (for test data)", "# of dangerous scenes", "# of warning scenes"]
    rows = [
        [c.site_id, str(c.total), f"{c.danger} ({c.danger_ratio:.3f})", f"{c.warning} ({c.warning_ratio:.3f})"]
        for c in counts
    ]
    return _table(header, rows)


def format_mse_table(rows: Sequence[tuple[str, str, str, float]]) -> str:
    """Rows of (site, target dataset, model name, test MSE)."""
    header = ["Target spot", "Target dataset", "Best training performance model", "Test MSE"]
    body = []
    last = None
    for site, dataset, model, mse in rows:
        body.append([site if site != last else "", dataset, model, f"{mse:.4f}"])
        last = site
    return _table(header, body)
