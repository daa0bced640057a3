"""Rigid 3D embedding of synthesized crease patterns at a fold angle.

The fold of a Miura strip is one-parameter: every main-group crease folds
by the common angle theta (sign per its mountain/valley kind) and each
zigzag crease folds by a dependent dihedral.  Panels are placed by a
breadth-first walk over the panel adjacency graph, rotating about each
shared crease.  Every interior vertex is then verified by the closure
condition (the product of fold rotations around the vertex must be the
identity); patterns that cannot close rigidly are rejected.

For zigzag creases the dependent dihedral is found from the per-vertex
closure.  A flat-foldable degree-4 vertex has a constant tan-half-angle
ratio between its two fold magnitudes, which gives an excellent starting
value; a bracketed 1D root-find on the closure residual refines it, so the
solver does not rely on the closed form being exact.

Placements are finally expressed in the base frame of the planar
transition-graph model: the plane spanned by the main creases (they stay
parallel to a common plane throughout the fold) with the first main crease
at azimuth initial_alpha(theta) and the first apex at the design start.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .geometry import point_in_polygon
from .pattern import CreaseKind, CreasePattern, FoldGroup
from .transition import initial_alpha, transition_delta

CLOSURE_TOL = 1e-9


class KinematicInfeasibilityError(ValueError):
    """The pattern cannot fold rigidly at the requested angle."""

    def __init__(self, message: str, worst_residual: float = math.nan):
        super().__init__(message)
        self.worst_residual = worst_residual


@dataclass(frozen=True)
class AnchoredPoint:
    """A point tied to a panel, stored in flat-pattern coordinates."""

    panel: int
    position: tuple   # (x, y) mm in the flat pattern

    def validate(self, pattern: CreasePattern):
        if not (0 <= self.panel < len(pattern.panels)):
            raise KeyError(f"unknown panel id {self.panel}")
        poly = pattern.panel_polygon(self.panel)
        if not point_in_polygon(self.position, poly, 1e-6):
            raise ValueError(
                f"anchor {self.position} lies outside panel {self.panel}")


@dataclass
class FoldedGeometry:
    pattern: CreasePattern
    theta: float
    rotations: np.ndarray       # (p, 3, 3)
    translations: np.ndarray    # (p, 3)
    crease_folds: dict          # crease key -> signed fold angle
    vertex_residuals: dict = field(default_factory=dict)
    max_residual: float = 0.0

    def panel_transform(self, pid: int):
        return self.rotations[pid], self.translations[pid]

    def panel_vertices_world(self, pid: int) -> np.ndarray:
        flat = self.pattern.panel_polygon(pid)
        pts = np.concatenate([flat, np.zeros((len(flat), 1))], axis=1)
        return pts @ self.rotations[pid].T + self.translations[pid]

    def point_world(self, pid: int, xy) -> np.ndarray:
        p = np.array([xy[0], xy[1], 0.0])
        return self.rotations[pid] @ p + self.translations[pid]

    def apex_chain_world(self) -> np.ndarray:
        """World positions of the row-0 main-crease chain vertices."""
        meta = self.pattern.meta
        if meta is None:
            raise ValueError("apex chain requires a synthesized pattern")
        n = meta.design.unit_count
        w = meta.unit_width
        pts = []
        for i in range(n + 2):
            pid = _upper_panel_id(n, 0, min(i, n))
            pts.append(self.point_world(pid, (meta.apex_x[i], w / 2)))
        return np.array(pts)

    def projected_endpoint(self) -> np.ndarray:
        """Endpoint of the main chain projected onto the base plane,
        expressed in transition-graph coordinates (relative to the design
        start point)."""
        chain = self.apex_chain_world()
        start = np.asarray(self.pattern.meta.design.start)
        return start + (chain[-1] - chain[0])[:2]


def _panels_per_row(n: int) -> int:
    return 2 + 2 * (n + 1)


def _upper_panel_id(n: int, row: int, unit: int) -> int:
    return row * _panels_per_row(n) + 2 + 2 * unit


def _lower_panel_id(n: int, row: int, unit: int) -> int:
    return _upper_panel_id(n, row, unit) + 1


def upper_panel_id(pattern: CreasePattern, row: int, unit: int) -> int:
    return _upper_panel_id(pattern.meta.design.unit_count, row, unit)


def lower_panel_id(pattern: CreasePattern, row: int, unit: int) -> int:
    return _lower_panel_id(pattern.meta.design.unit_count, row, unit)


def _rot_axis(d: np.ndarray, ang: float) -> np.ndarray:
    d = d / np.linalg.norm(d)
    K = np.array([[0, -d[2], d[1]], [d[2], 0, -d[0]], [-d[1], d[0], 0]])
    return np.eye(3) + math.sin(ang) * K + (1 - math.cos(ang)) * (K @ K)


def _signed_fold(kind: CreaseKind, magnitude: float) -> float:
    return magnitude if kind == CreaseKind.VALLEY else -magnitude


def assign_fold_angles(pattern: CreasePattern, theta: float) -> dict:
    """Signed fold angle for every non-border crease at main fold theta."""
    folds = {}
    t = math.tan(theta / 2)
    for c in pattern.creases:
        if c.kind == CreaseKind.BORDER:
            continue
        if c.fold_group == FoldGroup.MAIN:
            folds[c.key()] = _signed_fold(c.kind, theta)
        else:
            d = pattern.vertices[c.v2] - pattern.vertices[c.v1]
            line = math.atan2(d[1], d[0]) % math.pi
            cosb = abs(math.cos(line))
            if cosb < 1e-12:
                raise KinematicInfeasibilityError(
                    f"zigzag crease {c.key()} is perpendicular to the strip axis")
            folds[c.key()] = _signed_fold(c.kind, 2 * math.atan(t / cosb))
    return folds


def _interior_vertex_fans(pattern: CreasePattern) -> dict:
    """Interior vertex -> list of (crease key, outgoing direction angle)."""
    boundary = pattern.boundary_vertex_ids()
    fans = {}
    for c in pattern.creases:
        for v, o in ((c.v1, c.v2), (c.v2, c.v1)):
            if v in boundary:
                continue
            d = pattern.vertices[o] - pattern.vertices[v]
            fans.setdefault(v, []).append((c.key(), math.atan2(d[1], d[0])))
    for v in fans:
        fans[v].sort(key=lambda t: t[1])
    return fans


def _vertex_closure(fan, folds) -> np.ndarray:
    P = np.eye(3)
    for key, ang in fan:
        P = P @ _rot_axis(np.array([math.cos(ang), math.sin(ang), 0.0]), folds[key])
    return P


def _residual(P: np.ndarray) -> float:
    return float(np.linalg.norm(P - np.eye(3)))


def _refine_vertex(fan, folds) -> bool:
    """1D root-find on the vertex's zigzag fold, all zigzag creases at the
    vertex sharing one value.  Returns True when the vertex now closes."""
    zz = [key for key, _ in fan if key in folds and key in _refine_vertex.zigzag]
    if not zz:
        return False
    current = folds[zz[0]]

    def apply(x):
        trial = dict(folds)
        for k in zz:
            trial[k] = math.copysign(x, folds[k]) if folds[k] != 0 else x
        return trial

    def vec(x):
        P = _vertex_closure(fan, apply(x))
        return np.array([P[2, 1] - P[1, 2], P[0, 2] - P[2, 0], P[1, 0] - P[0, 1]])

    lo, hi = 0.0, math.pi - 1e-9
    v_lo, v_hi = vec(lo), vec(hi)
    comp = int(np.argmax(np.abs(v_lo - v_hi)))
    if v_lo[comp] * v_hi[comp] > 0:
        return False
    x = brentq(lambda s: vec(s)[comp], lo, hi, xtol=1e-14)
    trial = apply(x)
    if _residual(_vertex_closure(fan, trial)) < CLOSURE_TOL:
        for k in zz:
            folds[k] = trial[k]
        return True
    return False


_refine_vertex.zigzag = set()


def embed_fold(pattern: CreasePattern, theta: float,
               frame: str = "tg") -> FoldedGeometry:
    """Rigid placement of every panel at main fold angle theta in [0, pi).

    ``frame`` picks the output coordinates: "tg" expresses placements in the
    transition-graph base frame (main creases parallel to z=0, the first one
    at azimuth initial_alpha, the chain start pinned); "seed" leaves the
    first panel at its flat position, the natural frame when that panel is
    clamped to a work surface.
    """
    if not (0 <= theta < math.pi):
        raise ValueError(f"fold angle {theta} outside [0, pi)")
    if frame not in ("tg", "seed"):
        raise ValueError(f"unknown frame {frame!r}")
    rep_creases = {c.key(): c for c in pattern.creases}
    folds = assign_fold_angles(pattern, theta)
    fans = _interior_vertex_fans(pattern)

    # verify closure; refine zigzag folds where the direct assignment fails
    _refine_vertex.zigzag = {c.key() for c in pattern.creases
                             if c.fold_group == FoldGroup.ZIGZAG and c.kind != CreaseKind.BORDER}
    residuals = {}
    for v, fan in fans.items():
        if any(key not in folds for key, _ in fan):
            continue  # fan touches a border crease; no closure constraint
        r = _residual(_vertex_closure(fan, folds))
        if r > CLOSURE_TOL:
            _refine_vertex(fan, folds)
            r = _residual(_vertex_closure(fan, folds))
        residuals[v] = r
    worst = max(residuals.values(), default=0.0)
    if worst > CLOSURE_TOL:
        bad = max(residuals, key=residuals.get)
        raise KinematicInfeasibilityError(
            f"pattern does not fold rigidly at theta={theta:.6f}: vertex {bad} "
            f"closure residual {worst:.3e}", worst_residual=worst)

    # breadth-first panel placement
    edge_panels = {}
    for pid, poly in enumerate(pattern.panels):
        m = len(poly)
        for i in range(m):
            a, b = poly[i], poly[(i + 1) % m]
            key = (a, b) if a < b else (b, a)
            edge_panels.setdefault(key, []).append(pid)

    p_count = len(pattern.panels)
    R = np.zeros((p_count, 3, 3))
    T = np.zeros((p_count, 3))
    placed = np.zeros(p_count, bool)
    R[0] = np.eye(3)
    placed[0] = True
    queue = deque([0])
    while queue:
        p = queue.popleft()
        poly = pattern.panels[p]
        m = len(poly)
        for i in range(m):
            a, b = poly[i], poly[(i + 1) % m]
            key = (a, b) if a < b else (b, a)
            crease = rep_creases.get(key)
            if crease is None or crease.kind == CreaseKind.BORDER:
                continue
            for q in edge_panels[key]:
                if placed[q]:
                    continue
                pa = np.array([*pattern.vertices[a], 0.0])
                pb = np.array([*pattern.vertices[b], 0.0])
                hinge = _rot_axis(pb - pa, -folds[key])
                R[q] = R[p] @ hinge
                T[q] = T[p] + R[p] @ (pa - hinge @ pa)
                placed[q] = True
                queue.append(q)
    if not placed.all():
        raise KinematicInfeasibilityError("panel adjacency graph is disconnected")

    geom = FoldedGeometry(pattern=pattern, theta=theta, rotations=R, translations=T,
                          crease_folds=folds, vertex_residuals=residuals,
                          max_residual=worst)
    # hinge-gap cross-check over loop-closing creases
    gap = 0.0
    verts3 = np.concatenate([pattern.vertices, np.zeros((len(pattern.vertices), 1))], axis=1)
    for key, pids in edge_panels.items():
        if len(pids) != 2:
            continue
        pa, pb = pids
        for vtx in key:
            w1 = R[pa] @ verts3[vtx] + T[pa]
            w2 = R[pb] @ verts3[vtx] + T[pb]
            gap = max(gap, float(np.linalg.norm(w1 - w2)))
    scale = max(1.0, float(np.max(np.abs(pattern.vertices))))
    if gap > CLOSURE_TOL * scale * 10:
        raise KinematicInfeasibilityError(
            f"panel loop fails to close (hinge gap {gap:.3e} mm)", worst_residual=gap)

    if frame == "tg" and pattern.meta is not None:
        _to_base_frame(geom)
    return geom


def _to_base_frame(geom: FoldedGeometry):
    """Re-express placements in the transition-graph base frame."""
    meta = geom.pattern.meta
    n = meta.design.unit_count
    w = meta.unit_width
    theta = geom.theta
    chain = geom.apex_chain_world()
    u = chain[1:] - chain[:-1]
    norms = np.linalg.norm(u, axis=1)
    u = u / norms[:, None]

    if theta == 0.0:
        z = np.array([0.0, 0.0, 1.0])
    else:
        best, z = 0.0, None
        for i in range(len(u) - 1):
            c = np.cross(u[i], u[i + 1])
            if np.linalg.norm(c) > best:
                best, z = float(np.linalg.norm(c)), c / np.linalg.norm(c)
        if z is None or best < 1e-9:
            # single unit or collinear mains: use the panel-normal bisector
            nu = geom.rotations[_upper_panel_id(n, 0, 0)] @ np.array([0.0, 0.0, 1.0])
            nl = geom.rotations[_lower_panel_id(n, 0, 0)] @ np.array([0.0, 0.0, 1.0])
            z = nu + nl
            z = z - (z @ u[0]) * u[0]
            z = z / np.linalg.norm(z)
        else:
            # orient so the first turn matches the planar model's sign
            flags = meta.design.flags()
            want = transition_delta(meta.design.shape_angles[0], theta, flags[0])
            x0 = u[0]
            y0 = np.cross(z, x0)
            turn = math.atan2(float(u[1] @ y0), float(u[1] @ x0))
            if want != 0 and turn * want < 0:
                z = -z
    # mains must be parallel to the base plane
    tilt = float(np.max(np.abs(u @ z)))
    if tilt > 1e-7:
        raise KinematicInfeasibilityError(
            f"main creases are not parallel to a common plane (tilt {tilt:.3e})")

    a0 = initial_alpha(theta)
    x_axis = u[0] - (u[0] @ z) * z
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z, x_axis)
    # frame whose x-axis sits at azimuth -a0 relative to u0, so u0 lands at +a0
    ex = math.cos(a0) * x_axis - math.sin(a0) * y_axis
    ey = np.cross(z, ex)
    Rf = np.stack([ex, ey, z])       # world -> frame rotation
    origin = chain[0]
    # keep the chain start pinned at its flat-pattern position so theta=0
    # reproduces the flat pattern exactly
    anchor = np.array([meta.apex_x[0], meta.unit_width / 2, 0.0])
    for pid in range(len(geom.rotations)):
        geom.rotations[pid] = Rf @ geom.rotations[pid]
        geom.translations[pid] = Rf @ (geom.translations[pid] - origin) + anchor


def locate_points(folded: FoldedGeometry, anchors) -> np.ndarray:
    """World positions of flat-pattern anchors, shape (k, 3)."""
    out = np.zeros((len(anchors), 3))
    for i, a in enumerate(anchors):
        a.validate(folded.pattern)
        out[i] = folded.point_world(a.panel, a.position)
    return out


def snapshot_mesh(folded: FoldedGeometry):
    """Placed panels triangulated for visualization (not watertight)."""
    from .mesh import TriangleMesh
    vertices = []
    triangles = []
    for pid in range(len(folded.pattern.panels)):
        pts = folded.panel_vertices_world(pid)
        base = len(vertices)
        vertices.extend(pts.tolist())
        for k in range(1, len(pts) - 1):
            triangles.append((base, base + k, base + k + 1))
    return TriangleMesh(vertices=np.array(vertices), triangles=np.array(triangles, int))
