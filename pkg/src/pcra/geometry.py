"""Polygon approximation of risk sectors and overlap testing."""

from __future__ import annotations

import numpy as np

from pcra.risk import PcraSector

DEFAULT_ARC_SEGMENTS = 32


def sector_to_polygon(s: PcraSector, arc_segments: int = DEFAULT_ARC_SEGMENTS) -> np.ndarray:
    """Vertex list of a sector, shape ``(k, 2)``.

    The apex comes first, followed by ``arc_segments + 1`` points on the arc
    from ``theta_lo`` to ``theta_hi``. A zero-width sector collapses to the
    segment apex -> tip, a zero radius to the apex alone, and a full turn
    drops the apex and returns ``arc_segments`` points of a closed ring.
    """
    if arc_segments < 2:
        raise ValueError("arc_segments must be at least 2")
    apex = np.array([s.apex.x, s.apex.y], dtype=float)
    if s.radius == 0.0:
        return apex[None, :]
    if s.width == 0.0:
        t = np.radians(s.theta_lo)
        return np.vstack([apex, apex + s.radius * np.array([np.sin(t), np.cos(t)])])
    full = s.width >= 360.0
    thetas = np.radians(np.linspace(s.theta_lo, s.theta_hi, arc_segments + 1))
    arc = apex + s.radius * np.column_stack([np.sin(thetas), np.cos(thetas)])
    if full:
        return arc[:-1]
    return np.vstack([apex, arc])


def _edges(poly: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(poly) == 1:
        return np.empty((0, 2)), np.empty((0, 2))
    if len(poly) == 2:
        return poly[:1], poly[1:]
    return poly, np.roll(poly, -1, axis=0)


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _on_segment(p, a, b, eps):
    """Whether ``p`` (collinear with a-b) lies within the segment's bounding box."""
    return (
        (np.minimum(a[..., 0], b[..., 0]) - eps <= p[..., 0])
        & (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]) + eps)
        & (np.minimum(a[..., 1], b[..., 1]) - eps <= p[..., 1])
        & (p[..., 1] <= np.maximum(a[..., 1], b[..., 1]) + eps)
    )


def segments_intersect(a0, a1, b0, b1, eps: float = 1e-12) -> np.ndarray:
    """Pairwise closed-segment intersection: ``(n, 2)`` x ``(m, 2)`` -> ``(n, m)`` bool."""
    A0, A1 = a0[:, None, :], a1[:, None, :]
    B0, B1 = b0[None, :, :], b1[None, :, :]
    d1 = _cross(B0, B1, A0)
    d2 = _cross(B0, B1, A1)
    d3 = _cross(A0, A1, B0)
    d4 = _cross(A0, A1, B1)
    proper = (((d1 > eps) & (d2 < -eps)) | ((d1 < -eps) & (d2 > eps))) & (
        ((d3 > eps) & (d4 < -eps)) | ((d3 < -eps) & (d4 > eps))
    )
    touch = (
        ((np.abs(d1) <= eps) & _on_segment(A0, B0, B1, eps))
        | ((np.abs(d2) <= eps) & _on_segment(A1, B0, B1, eps))
        | ((np.abs(d3) <= eps) & _on_segment(B0, A0, A1, eps))
        | ((np.abs(d4) <= eps) & _on_segment(B1, A0, A1, eps))
    )
    return proper | touch


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd containment of points in a simple polygon (boundary excluded)."""
    if len(poly) < 3:
        return np.zeros(len(points), dtype=bool)
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    xa, ya = poly[:, 0][None, :], poly[:, 1][None, :]
    xb, yb = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (ya > y) != (yb > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = xa + (y - ya) * (xb - xa) / (yb - ya)
    hits = straddle & (x < x_cross)
    return (hits.sum(axis=1) % 2) == 1


def polygons_intersect(p: np.ndarray, q: np.ndarray, eps: float = 1e-12) -> bool:
    """Closed-set intersection of two polygons, segments or points."""
    pa, pb = _edges(p)
    qa, qb = _edges(q)
    if len(pa) and len(qa) and segments_intersect(pa, pb, qa, qb, eps).any():
        return True
    if points_in_polygon(q, p).any() or points_in_polygon(p, q).any():
        return True
    # remaining cases involve a single point
    if len(p) == 1 or len(q) == 1:
        pt, other = (p, q) if len(p) == 1 else (q, p)
        if len(other) == 1:
            return bool(np.all(np.abs(pt - other) <= eps))
        oa, ob = _edges(other)
        on = (np.abs(_cross(oa, ob, pt)) <= eps) & _on_segment(pt, oa, ob, eps)
        return bool(on.any())
    return False


def sectors_overlap(a: PcraSector, b: PcraSector, arc_segments: int = DEFAULT_ARC_SEGMENTS) -> bool:
    """Whether the polygonal approximations of two sectors intersect."""
    # cheap reject on apex distance
    gap = np.hypot(a.apex.x - b.apex.x, a.apex.y - b.apex.y)
    if gap > a.radius + b.radius + 1e-9:
        return False
    return polygons_intersect(sector_to_polygon(a, arc_segments), sector_to_polygon(b, arc_segments))


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def discretization_gap(s: PcraSector, arc_segments: int = DEFAULT_ARC_SEGMENTS) -> float:
    """Area of the sector missed by its inscribed polygon."""
    phi = np.radians(min(s.width, 360.0)) / arc_segments
    return arc_segments * 0.5 * s.radius ** 2 * (phi - np.sin(phi))
