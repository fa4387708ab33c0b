"""Convex hulls, convex-set distances and polygon penetration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

_EPS = 1e-12


@dataclass(frozen=True)
class ConvexSet:
    """Counter-clockwise hull vertices. One vertex is a point, two a segment."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("empty point set")

    @classmethod
    def from_array(cls, pts) -> "ConvexSet":
        return cls(tuple((float(x), float(y)) for x, y in np.asarray(pts, dtype=float).reshape(-1, 2)))

    def __len__(self):
        return len(self.vertices)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def edges(self):
        """Boundary segments: none for a point, one for a segment, n for a polygon."""
        v = self.vertices
        n = len(v)
        if n == 1:
            return []
        if n == 2:
            return [(v[0], v[1])]
        return [(v[i], v[(i + 1) % n]) for i in range(n)]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence) -> ConvexSet:
    """Monotone-chain hull, CCW, collinear points dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if not pts:
        raise ValueError("empty point set")
    if len(pts) <= 2:
        return ConvexSet(tuple(pts))
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return ConvexSet(tuple(hull))


def _segment_point_distance(p, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def contains_point(s: ConvexSet, p, tol: float = 1e-12) -> bool:
    v = s.vertices
    n = len(v)
    if n == 1:
        return math.hypot(p[0] - v[0][0], p[1] - v[0][1]) <= tol
    if n == 2:
        return _segment_point_distance(p, v[0], v[1]) <= tol
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        L = math.hypot(b[0] - a[0], b[1] - a[1])
        if _cross(a, b, p) < -tol * L:
            return False
    return True


def point_distance_to_set(p, s: ConvexSet) -> float:
    if contains_point(s, p):
        return 0.0
    v = s.vertices
    if len(v) == 1:
        return math.hypot(p[0] - v[0][0], p[1] - v[0][1])
    return min(_segment_point_distance(p, a, b) for a, b in s.edges())


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    return (
        (d1 == 0 and _segment_point_distance(p1, q1, q2) <= _EPS)
        or (d2 == 0 and _segment_point_distance(p2, q1, q2) <= _EPS)
        or (d3 == 0 and _segment_point_distance(q1, p1, p2) <= _EPS)
        or (d4 == 0 and _segment_point_distance(q2, p1, p2) <= _EPS)
    )


def intersects(a: ConvexSet, b: ConvexSet) -> bool:
    if any(contains_point(b, p) for p in a.vertices):
        return True
    if any(contains_point(a, p) for p in b.vertices):
        return True
    for p1, p2 in a.edges():
        for q1, q2 in b.edges():
            if _segments_intersect(p1, p2, q1, q2):
                return True
    return False


def set_distance(a: ConvexSet, b: ConvexSet) -> float:
    """Smallest distance between two convex regions; 0 when they intersect."""
    if intersects(a, b):
        return 0.0
    best = math.inf
    for src, dst in ((a, b), (b, a)):
        for p in src.vertices:
            d = point_distance_to_set(p, dst)
            if d < best:
                best = d
    return best


def _edge_normals(v):
    n = len(v)
    out = []
    for i in range(n):
        ax, ay = v[i]
        bx, by = v[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        L = math.hypot(ex, ey)
        out.append((ey / L, -ex / L))
    return out


def _project(v, n):
    dots = [p[0] * n[0] + p[1] * n[1] for p in v]
    return min(dots), max(dots)


def penetration(a: ConvexSet, b: ConvexSet) -> Optional[tuple[float, tuple[float, float]]]:
    """Minimum translation (depth, unit normal) that moves ``b`` out of ``a``.

    Returns None when a separating axis exists. Touching polygons give depth 0.
    Ties go to the lowest edge index of ``a``, then of ``b``.
    """
    if len(a) < 3 or len(b) < 3:
        raise ValueError("penetration needs polygons with >= 3 vertices")
    best_depth = math.inf
    best_normal = (0.0, 0.0)
    for n in _edge_normals(a.vertices) + _edge_normals(b.vertices):
        amin, amax = _project(a.vertices, n)
        bmin, bmax = _project(b.vertices, n)
        fwd = amax - bmin
        back = bmax - amin
        if fwd < 0 or back < 0:
            return None
        if fwd <= back:
            depth, normal = fwd, n
        else:
            depth, normal = back, (-n[0], -n[1])
        if depth < best_depth:
            best_depth, best_normal = depth, normal
    return best_depth, best_normal


def polygon_area_centroid(v) -> tuple[float, float]:
    v = np.asarray(v, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cr = x * ys - xs * y
    a = cr.sum() / 2.0
    if abs(a) < 1e-18:
        return float(x.mean()), float(y.mean())
    return float(((x + xs) * cr).sum() / (6 * a)), float(((y + ys) * cr).sum() / (6 * a))
