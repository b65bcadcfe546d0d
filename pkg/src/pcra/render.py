"""SVG snapshot of one assessed scene."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import quoteattr

import numpy as np

from pcra.exceptions import PcraError
from pcra.risk import PcraSector, ZoneGrid
from pcra.severity import SceneAssessment, SeverityLevel, TimestepRecord
from pcra.trajectory import ObjectClass, Scene

SEVERITY_COLORS = {
    SeverityLevel.DANGER: "#d62728",
    SeverityLevel.WARNING: "#ff7f0e",
    SeverityLevel.RELATIVE_SAFE: "#2ca02c",
}
TRACK_COLORS = {ObjectClass.VEHICLE: "#1f4e9c", ObjectClass.PEDESTRIAN: "#7b3f9e"}
HORIZON_OPACITY = (0.35, 0.22, 0.12)


class RenderError(PcraError):
    pass


class _Canvas:
    """World (y up) to SVG (y down) mapping."""

    def __init__(self, roi, scale: float = 8.0, pad: float = 20.0):
        self.x0, self.y0, self.x1, self.y1 = roi
        self.scale, self.pad = scale, pad

    @property
    def size(self) -> tuple[float, float]:
        return (
            (self.x1 - self.x0) * self.scale + 2 * self.pad,
            (self.y1 - self.y0) * self.scale + 2 * self.pad,
        )

    def xy(self, x, y) -> tuple[float, float]:
        return (x - self.x0) * self.scale + self.pad, (self.y1 - y) * self.scale + self.pad

    def world(self, sx, sy) -> tuple[float, float]:
        return (sx - self.pad) / self.scale + self.x0, self.y1 - (sy - self.pad) / self.scale


def _f(v: float) -> str:
    return f"{v:.6f}".rstrip("0").rstrip(".")


def sector_path(s: PcraSector, canvas: _Canvas) -> str:
    """SVG path data: apex, straight edge to the arc start, arc, close.

    Bearings grow clockwise on screen, which is the SVG positive sweep.
    """
    ax, ay = canvas.xy(s.apex.x, s.apex.y)
    r = s.radius * canvas.scale
    if s.width >= 360.0:
        return f"M {_f(ax - r)} {_f(ay)} A {_f(r)} {_f(r)} 0 1 1 {_f(ax + r)} {_f(ay)} A {_f(r)} {_f(r)} 0 1 1 {_f(ax - r)} {_f(ay)} Z"
    lo, hi = math.radians(s.theta_lo), math.radians(s.theta_hi)
    p0 = canvas.xy(s.apex.x + s.radius * math.sin(lo), s.apex.y + s.radius * math.cos(lo))
    p1 = canvas.xy(s.apex.x + s.radius * math.sin(hi), s.apex.y + s.radius * math.cos(hi))
    large = 1 if s.width > 180.0 else 0
    return (
        f"M {_f(ax)} {_f(ay)} L {_f(p0[0])} {_f(p0[1])} "
        f"A {_f(r)} {_f(r)} 0 {large} 1 {_f(p1[0])} {_f(p1[1])} Z"
    )


def _select(assessment: SceneAssessment, time_s: float | None) -> TimestepRecord | None:
    if not assessment.records:
        return None
    if time_s is None:
        return assessment.worst_record()
    return min(assessment.records, key=lambda r: abs(r.time_s - time_s))


def render_scene(
    assessment: SceneAssessment,
    scene: Scene,
    grid: ZoneGrid,
    out_path: str | Path | None = None,
    time_s: float | None = None,
) -> str:
    """Draw the scene with its sectors at one timestep and return the SVG text.

    The timestep defaults to the first one at the scene's verdict level.
    Skipped scenes are drawn with trajectories only.
    """
    if assessment.scene_id != scene.scene_id:
        raise RenderError(f"assessment is for scene {assessment.scene_id!r}, not {scene.scene_id!r}")
    cv = _Canvas(grid.roi)
    w, h = cv.size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h)}" viewBox="0 0 {_f(w)} {_f(h)}">',
        f"<title>{quoteattr(scene.scene_id)[1:-1]}</title>",
    ]
    x0, y0 = cv.xy(grid.roi[0], grid.roi[3])
    x1, y1 = cv.xy(grid.roi[2], grid.roi[1])
    out.append(
        f'<rect class="roi" x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0)}" height="{_f(y1 - y0)}" '
        'fill="#fafafa" stroke="#333" stroke-width="1"/>'
    )
    for b in grid.boundaries(ObjectClass.VEHICLE)[1:-1]:
        a, _ = cv.xy(b, 0.0)
        out.append(f'<line class="zone-x" x1="{_f(a)}" y1="{_f(y0)}" x2="{_f(a)}" y2="{_f(y1)}" stroke="#ccc" stroke-dasharray="3 3"/>')
    for b in grid.boundaries(ObjectClass.PEDESTRIAN)[1:-1]:
        _, a = cv.xy(0.0, b)
        out.append(f'<line class="zone-y" x1="{_f(x0)}" y1="{_f(a)}" x2="{_f(x1)}" y2="{_f(a)}" stroke="#ccc" stroke-dasharray="3 3"/>')

    for traj in (scene.vehicle, scene.pedestrian):
        pts = " ".join(f"{_f(px)},{_f(py)}" for px, py in (cv.xy(*p) for p in np.asarray(traj.points)))
        out.append(
            f'<polyline class="track" data-class="{traj.object_class.value}" points="{pts}" '
            f'fill="none" stroke="{TRACK_COLORS[traj.object_class]}" stroke-width="1.5"/>'
        )

    rec = _select(assessment, time_s)
    if rec is not None:
        color = SEVERITY_COLORS[rec.severity]
        out.append(f'<g class="sectors" data-time="{_f(rec.time_s)}" data-severity="{rec.severity.label}">')
        for cls, sectors in ((ObjectClass.VEHICLE, rec.vehicle_sectors), (ObjectClass.PEDESTRIAN, rec.pedestrian_sectors)):
            for k, s in enumerate(sectors):
                if s is None or s.radius == 0.0:
                    continue
                op = HORIZON_OPACITY[min(k, len(HORIZON_OPACITY) - 1)]
                out.append(
                    f'<path class="sector" data-class="{cls.value}" data-horizon="{_f(assessment.horizons[k])}" '
                    f'd="{sector_path(s, cv)}" fill="{color}" fill-opacity="{op}" stroke="{color}" stroke-width="1"/>'
                )
        out.append("</g>")
        tx, ty = cv.xy(grid.roi[0], grid.roi[3])
        out.append(
            f'<text x="{_f(tx)}" y="{_f(ty - 6)}" font-family="sans-serif" font-size="11" fill="{color}">'
            f"t = {rec.time_s:.1f} s: {rec.severity.label}</text>"
        )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if out_path is not None:
        p = Path(out_path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return text
