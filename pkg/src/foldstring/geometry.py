"""Shared planar geometry primitives.

Everything works on plain (x, y) tuples or numpy arrays in millimetres.
Predicates use an absolute tolerance, default 1e-9 mm.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-9


def seg_intersects(p1, p2, q1, q2, eps: float = EPS) -> bool:
    """True if closed segments [p1,p2] and [q1,q2] share at least one point."""
    p1 = np.asarray(p1, float); p2 = np.asarray(p2, float)
    q1 = np.asarray(q1, float); q2 = np.asarray(q2, float)
    d1 = _cross(q2 - q1, p1 - q1)
    d2 = _cross(q2 - q1, p2 - q1)
    d3 = _cross(p2 - p1, q1 - p1)
    d4 = _cross(p2 - p1, q2 - p1)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
       ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True
    if abs(d1) <= eps and _on_segment(q1, q2, p1, eps):
        return True
    if abs(d2) <= eps and _on_segment(q1, q2, p2, eps):
        return True
    if abs(d3) <= eps and _on_segment(p1, p2, q1, eps):
        return True
    if abs(d4) <= eps and _on_segment(p1, p2, q2, eps):
        return True
    return False


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _on_segment(a, b, p, eps: float) -> bool:
    return (min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps and
            min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps)


def seg_intersection_point(p1, p2, q1, q2, eps: float = EPS):
    """Intersection point of two proper (non-parallel) segments, or None."""
    p1 = np.asarray(p1, float); p2 = np.asarray(p2, float)
    q1 = np.asarray(q1, float); q2 = np.asarray(q2, float)
    r = p2 - p1
    s = q2 - q1
    denom = _cross(r, s)
    if abs(denom) <= eps:
        return None
    t = _cross(q1 - p1, s) / denom
    u = _cross(q1 - p1, r) / denom
    if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
        return p1 + t * r
    return None


def polyline_self_intersects(points, eps: float = EPS) -> bool:
    """Self-intersection test for an open polyline given as an (m,2) array.

    Non-adjacent segments may not touch at all; adjacent segments may share
    only their common endpoint (doubling back counts as an intersection).
    """
    pts = np.asarray(points, float)
    n = len(pts) - 1
    if n < 1:
        return False
    for i in range(n):
        for j in range(i + 1, n):
            a, b = pts[i], pts[i + 1]
            c, d = pts[j], pts[j + 1]
            if j == i + 1:
                # shared endpoint b == c; overlap iff the turn doubles back
                u = b - a
                v = d - c
                lu = np.hypot(*u); lv = np.hypot(*v)
                if lu <= eps or lv <= eps:
                    return True
                cosang = float(np.dot(u, v)) / (lu * lv)
                sinang = _cross(u, v) / (lu * lv)
                if abs(sinang) <= eps and cosang < 0:
                    return True
                continue
            if seg_intersects(a, b, c, d, eps):
                return True
    return False


def polygon_area(poly) -> float:
    """Signed area (positive for counter-clockwise orientation)."""
    p = np.asarray(poly, float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_centroid(poly):
    """Area centroid of a simple polygon."""
    p = np.asarray(poly, float)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    w = x * yn - xn * y
    a = np.sum(w) / 2.0
    if abs(a) < EPS * EPS:
        return p.mean(axis=0)
    cx = np.sum((x + xn) * w) / (6 * a)
    cy = np.sum((y + yn) * w) / (6 * a)
    return np.array([cx, cy])


def is_convex(poly, eps: float = EPS) -> bool:
    """True for a strictly convex, counter-clockwise simple polygon."""
    p = np.asarray(poly, float)
    m = len(p)
    if m < 3:
        return False
    for i in range(m):
        a, b, c = p[i], p[(i + 1) % m], p[(i + 2) % m]
        if _cross(b - a, c - b) <= eps:
            return False
    return True


def point_in_polygon(pt, poly, eps: float = EPS) -> bool:
    """Point-in-polygon test (boundary counts as inside)."""
    x, y = float(pt[0]), float(pt[1])
    p = np.asarray(poly, float)
    m = len(p)
    inside = False
    for i in range(m):
        x1, y1 = p[i]
        x2, y2 = p[(i + 1) % m]
        # on-boundary check
        if abs(_cross((x2 - x1, y2 - y1), (x - x1, y - y1))) <= eps * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
            if min(x1, x2) - eps <= x <= max(x1, x2) + eps and min(y1, y2) - eps <= y <= max(y1, y2) + eps:
                return True
        if (y1 > y) != (y2 > y):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xint > x:
                inside = not inside
    return inside


def distance_point_to_polygon(pt, poly) -> float:
    """Unsigned distance from a point to the polygon boundary."""
    p = np.asarray(poly, float)
    pt = np.asarray(pt, float)
    best = math.inf
    m = len(p)
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        ab = b - a
        denom = float(np.dot(ab, ab))
        t = 0.0 if denom == 0 else max(0.0, min(1.0, float(np.dot(pt - a, ab)) / denom))
        best = min(best, float(np.hypot(*(a + t * ab - pt))))
    return best


class InsetError(ValueError):
    """Inset distance exceeds what the polygon can absorb."""


def inset_convex(poly, dist: float):
    """Parallel-edge inset of a strictly convex CCW polygon by ``dist``.

    Each edge moves inward by ``dist``; the result is the intersection of the
    supporting half-planes.  Raises InsetError when the polygon vanishes.
    """
    p = np.asarray(poly, float)
    m = len(p)
    if m < 3:
        raise InsetError("polygon needs at least 3 vertices")
    if dist < 0:
        raise InsetError("inset distance must be non-negative")
    if dist == 0:
        return p.copy()
    lines = []  # (point, direction) of each shifted edge
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        d = b - a
        ln = np.hypot(*d)
        if ln < EPS:
            raise InsetError("degenerate edge in polygon")
        d = d / ln
        inward = np.array([-d[1], d[0]])   # left of travel = inside for CCW
        lines.append((a + inward * dist, d))
    out = []
    for i in range(m):
        p0, d0 = lines[(i - 1) % m]
        p1, d1 = lines[i]
        denom = _cross(d0, d1)
        if abs(denom) < EPS:
            # collinear consecutive edges: keep the shifted vertex
            out.append(p1)
            continue
        t = _cross(p1 - p0, d1) / denom
        out.append(p0 + t * d0)
    out = np.array(out)
    if not is_convex(out) or polygon_area(out) <= EPS:
        raise InsetError(f"inset {dist} collapses the polygon")
    # over-insetting can reflect the polygon while staying convex; every
    # result vertex must honor every shifted half-plane
    for v in out:
        for i in range(m):
            a, b = p[i], p[(i + 1) % m]
            d = b - a
            ln = np.hypot(*d)
            inward = np.array([-d[1], d[0]]) / ln
            if float(np.dot(v - a, inward)) < dist - 1e-9:
                raise InsetError(f"inset {dist} collapses the polygon")
    return out


def inradius_convex(poly) -> float:
    """Radius of the largest inscribed circle of a convex CCW polygon."""
    p = np.asarray(poly, float)
    lo, hi = 0.0, float(np.max(np.ptp(p, axis=0)))
    for _ in range(80):
        mid = (lo + hi) / 2
        try:
            inset_convex(p, mid)
            lo = mid
        except InsetError:
            hi = mid
    return lo


class Rect:
    """Axis-aligned region with optionally unbounded extents (mm)."""

    def __init__(self, xmin=-math.inf, ymin=-math.inf, xmax=math.inf, ymax=math.inf):
        if xmin > xmax or ymin > ymax:
            raise ValueError("empty region")
        self.xmin, self.ymin = float(xmin), float(ymin)
        self.xmax, self.ymax = float(xmax), float(ymax)

    def contains(self, pt) -> bool:
        x, y = float(pt[0]), float(pt[1])
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def to_dict(self):
        def enc(v):
            return None if math.isinf(v) else v
        return {"xmin": enc(self.xmin), "ymin": enc(self.ymin),
                "xmax": enc(self.xmax), "ymax": enc(self.ymax)}

    @classmethod
    def from_dict(cls, d):
        def dec(v, default):
            return default if v is None else float(v)
        return cls(dec(d.get("xmin"), -math.inf), dec(d.get("ymin"), -math.inf),
                   dec(d.get("xmax"), math.inf), dec(d.get("ymax"), math.inf))

    def __repr__(self):
        return f"Rect(xmin={self.xmin}, ymin={self.ymin}, xmax={self.xmax}, ymax={self.ymax})"

    def __eq__(self, other):
        return isinstance(other, Rect) and (self.xmin, self.ymin, self.xmax, self.ymax) == \
            (other.xmin, other.ymin, other.xmax, other.ymax)
