"""Trajectory CSV ingestion and artifact file helpers."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from pcra.exceptions import ArtifactError, IngestError, InvalidTrajectoryError
from pcra.trajectory import ObjectClass, Scene, Trajectory, resample, smooth_trajectory

_LOG = logging.getLogger(__name__)

CSV_COLUMNS = ("scene_id", "object_id", "class", "frame", "time_s", "x", "y")


@dataclass
class IngestReport:
    rows: int = 0
    scenes_read: int = 0
    scenes_kept: int = 0
    dropped: dict[str, str] = field(default_factory=dict)  # scene_id -> reason

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "scenes_read": self.scenes_read,
            "scenes_kept": self.scenes_kept,
            "scenes_dropped": len(self.dropped),
            "dropped": dict(sorted(self.dropped.items())),
        }


def read_trajectory_csv(path: str | Path) -> tuple[list[Scene], int]:
    """Parse a trajectory CSV into raw (unresampled) scenes.

    Returns the scenes in file order and the number of data rows. Raises
    :class:`IngestError` carrying the line number for malformed rows and
    the scene id for structural problems.
    """
    path = Path(path)
    # scene_id -> object_id -> [class, [(t, x, y)]]
    grouped: dict[str, dict[str, list]] = {}
    rows = 0
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{path}: empty file", line=1)
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise IngestError(f"{path}: header lacks columns {missing}", line=1)
        col = {c: header.index(c) for c in CSV_COLUMNS}
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"line {line}: expected {len(header)} fields, got {len(row)}", line=line)
            sid, oid = row[col["scene_id"]].strip(), row[col["object_id"]].strip()
            cls_text = row[col["class"]].strip().lower()
            try:
                cls = ObjectClass(cls_text)
                t = float(row[col["time_s"]])
                x = float(row[col["x"]])
                y = float(row[col["y"]])
                int(float(row[col["frame"]]))
            except ValueError as exc:
                raise IngestError(f"line {line}: {exc}", line=line, scene_id=sid) from None
            if not (np.isfinite(t) and np.isfinite(x) and np.isfinite(y)):
                raise IngestError(f"line {line}: non-finite value", line=line, scene_id=sid)
            if not sid or not oid:
                raise IngestError(f"line {line}: empty scene_id or object_id", line=line)
            entry = grouped.setdefault(sid, {}).setdefault(oid, [cls, []])
            if entry[0] is not cls:
                raise IngestError(f"line {line}: object {oid} changes class", line=line, scene_id=sid)
            entry[1].append((t, x, y))
            rows += 1
    if rows == 0:
        raise IngestError(f"{path}: no data rows", line=2)

    scenes = []
    for sid, objects in grouped.items():
        by_class: dict[ObjectClass, list[Trajectory]] = {ObjectClass.VEHICLE: [], ObjectClass.PEDESTRIAN: []}
        for oid, (cls, samples) in objects.items():
            arr = np.array(samples, dtype=float)
            if np.any(np.diff(arr[:, 0]) <= 0):
                raise IngestError(f"scene {sid}: timestamps of object {oid} are not strictly increasing", scene_id=sid)
            if len(arr) < 2:
                raise IngestError(f"scene {sid}: object {oid} has fewer than 2 samples", scene_id=sid)
            by_class[cls].append(Trajectory(cls, arr[:, 0], arr[:, 1:], oid))
        counts = {c.value: len(v) for c, v in by_class.items()}
        if counts != {"vehicle": 1, "pedestrian": 1}:
            raise IngestError(f"scene {sid}: need exactly one vehicle and one pedestrian, got {counts}", scene_id=sid)
        scenes.append(Scene(sid, by_class[ObjectClass.VEHICLE][0], by_class[ObjectClass.PEDESTRIAN][0]))
    return scenes, rows


def prepare_scenes(
    scenes: Iterable[Scene],
    sample_rate_hz: float = 5.0,
    smoothing_window: int = 3,
    report: IngestReport | None = None,
) -> list[Scene]:
    """Resample, drop non-interactive scenes, then smooth speed and bearing."""
    out = []
    for scene in scenes:
        if report is not None:
            report.scenes_read += 1
        try:
            veh = resample(scene.vehicle, sample_rate_hz)
            ped = resample(scene.pedestrian, sample_rate_hz)
        except InvalidTrajectoryError as exc:
            if report is not None:
                report.dropped[scene.scene_id] = f"too short: {exc}"
            continue
        s = Scene(scene.scene_id, veh, ped, scene.meta)
        if not s.is_interactive:
            if report is not None:
                report.dropped[scene.scene_id] = "vehicle and pedestrian never present at the same time"
            continue
        out.append(Scene(s.scene_id, smooth_trajectory(veh, smoothing_window), smooth_trajectory(ped, smoothing_window), s.meta))
    if report is not None:
        report.scenes_kept = len(out)
    return out


def ingest(path: str | Path, sample_rate_hz: float = 5.0, smoothing_window: int = 3) -> tuple[list[Scene], IngestReport]:
    """Read, validate, resample, filter and smooth a trajectory CSV."""
    raw, rows = read_trajectory_csv(path)
    report = IngestReport(rows=rows)
    scenes = prepare_scenes(raw, sample_rate_hz, smoothing_window, report)
    if report.dropped:
        _LOG.info("dropped %d of %d scenes", len(report.dropped), report.scenes_read)
    return scenes, report


def write_trajectory_csv(scenes: Sequence[Scene], path: str | Path, frame_rate_hz: float | None = None) -> None:
    """Write scenes in the ingestion CSV layout.

    ``frame`` is ``round(time_s * frame_rate_hz)``; without a rate the
    sample index within each trajectory is used.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for scene in scenes:
            for traj in (scene.vehicle, scene.pedestrian):
                oid = traj.object_id or f"{scene.scene_id}-{traj.object_class.value[0]}"
                for k, (t, (x, y)) in enumerate(zip(traj.times, traj.points)):
                    frame = int(round(t * frame_rate_hz)) if frame_rate_hz else k
                    w.writerow([scene.scene_id, oid, traj.object_class.value, frame, repr(float(t)), repr(float(x)), repr(float(y))])


def dump_json(obj, path: str | Path) -> None:
    """Write JSON with sorted keys so reruns produce identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path: str | Path, version: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing input file {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not valid JSON ({exc})") from None
    if version is not None and (not isinstance(data, dict) or data.get("version") != version):
        found = data.get("version") if isinstance(data, dict) else None
        raise ArtifactError(f"{path}: version {found!r}, expected {version!r}")
    return data


def dump_jsonl(records: Iterable[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def load_jsonl(path: str | Path, version: str | None = None) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing input file {path}")
    out = []
    for k, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if version is not None and rec.get("version") != version:
            raise ArtifactError(f"{path}:{k}: version {rec.get('version')!r}, expected {version!r}")
        out.append(rec)
    return out
