"""Triangle meshes, polygon triangulation, prisms and binary STL.

Meshes are triangle soups: a vertex array and an index array.  Solids are
built as prisms over polygons with holes (caps triangulated by ear
clipping with hole bridging, side walls from the boundary rings), so every
generated solid is watertight by construction; ``mesh_diagnostics``
verifies this independently by edge counting.

Binary STL layout: an 80-byte header, a little-endian uint32 triangle
count, then 50 bytes per triangle (twelve float32: normal and three
vertices, plus a two-byte attribute).  Normals are recomputed from the
winding on export.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import polygon_area

AREA_EPS = 1e-12


@dataclass
class TriangleMesh:
    vertices: np.ndarray                    # (n, 3) float
    triangles: np.ndarray                   # (m, 3) int

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, int).reshape(-1, 3)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def signed_volume(self) -> float:
        if len(self.triangles) == 0:
            return 0.0
        v = self.vertices
        t = self.triangles
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def bounding_box(self):
        if len(self.vertices) == 0:
            return np.zeros(3), np.zeros(3)
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def empty_mesh() -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int))


def merge_meshes(meshes) -> TriangleMesh:
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        if m.triangle_count == 0:
            continue
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    if not verts:
        return empty_mesh()
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


# ---------------------------------------------------------------- polygons

def _point_in_triangle(p, a, b, c, eps=1e-12):
    def s(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])
    d1, d2, d3 = s(a, b, p), s(b, c, p), s(c, a, p)
    neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
    pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
    return not (neg and pos)


def _bridge_holes(outer, holes):
    """Combine outer ring (CCW) and hole rings (CW) into one indexed loop.

    Returns a list of (original_index, xy) with bridge edges duplicated, the
    standard preprocessing for ear clipping.  Original indices reference the
    concatenation [outer, *holes].
    """
    loop = [(i, np.asarray(p, float)) for i, p in enumerate(outer)]
    offset = len(outer)
    remaining = []
    for h in holes:
        remaining.append([(offset + i, np.asarray(p, float)) for i, p in enumerate(h)])
        offset += len(h)
    # connect holes rightmost-first
    remaining.sort(key=lambda ring: -max(p[0] for _, p in ring))
    while remaining:
        ring = remaining.pop(0)
        k = max(range(len(ring)), key=lambda i: ring[i][1][0])
        hx = ring[k][1]
        obstacles = _ring_edges(loop, closed=True) + \
            [e for other in remaining for e in _ring_edges(other, closed=True)] + \
            _ring_edges(ring, closed=True)
        # closest vertex on the current loop with an unobstructed connection;
        # vertices already duplicated by an earlier bridge would pinch the
        # loop, so they are skipped
        seen = {}
        for _, p in loop:
            key = (float(p[0]), float(p[1]))
            seen[key] = seen.get(key, 0) + 1
        order = sorted(range(len(loop)), key=lambda j: float(np.hypot(*(loop[j][1] - hx))))
        best = None
        for j in order:
            q = loop[j][1]
            if seen[(float(q[0]), float(q[1]))] > 1:
                continue
            if _segment_clear(hx, q, obstacles):
                best = j
                break
        if best is None:
            raise ValueError("cannot bridge hole into outer boundary")
        loop = loop[:best + 1] + ring[k:] + ring[:k + 1] + loop[best:]
    return loop


def _ring_edges(ring, closed: bool):
    n = len(ring)
    return [(ring[i][1], ring[(i + 1) % n][1]) for i in range(n if closed else n - 1)]


def _segment_clear(a, b, edges) -> bool:
    """No edge properly crosses segment (a, b); edges touching a or b at an
    endpoint are ignored."""

    def xp(u, v):
        return u[0] * v[1] - u[1] * v[0]

    ab = b - a
    for p, q in edges:
        if np.array_equal(p, a) or np.array_equal(p, b) or \
           np.array_equal(q, a) or np.array_equal(q, b):
            continue
        d1 = xp(ab, p - a)
        d2 = xp(ab, q - a)
        d3 = xp(q - p, a - p)
        d4 = xp(q - p, b - p)
        if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
            return False
        # collinear overlap with the candidate bridge also blocks it
        if d1 == 0 and d2 == 0:
            lo = min(a[0], b[0]), min(a[1], b[1])
            hi = max(a[0], b[0]), max(a[1], b[1])
            for r in (p, q):
                if lo[0] <= r[0] <= hi[0] and lo[1] <= r[1] <= hi[1]:
                    return False
    return True


def triangulate_polygon(outer, holes=()) -> tuple:
    """Ear-clip a polygon with holes.

    ``outer`` is CCW, ``holes`` CW.  Returns (vertices, triangles) where
    vertices is the concatenation [outer, *holes] as an (n, 2) array and
    triangles index into it.
    """
    outer = [np.asarray(p, float) for p in outer]
    holes = [[np.asarray(p, float) for p in h] for h in holes]
    all_pts = np.array(outer + [p for h in holes for p in h])
    loop = _bridge_holes(outer, holes)
    tris = []
    guard = 0
    max_iter = 4 * len(loop) * len(loop) + 64
    while len(loop) > 3 and guard < max_iter:
        guard += 1
        n = len(loop)
        clipped = False
        # prefer strictly convex ears; fall back to degenerate ones
        for pass_eps in (AREA_EPS, -AREA_EPS):
            for i in range(n):
                ia, a = loop[(i - 1) % n]
                ib, b = loop[i]
                ic, c = loop[(i + 1) % n]
                cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if cross <= pass_eps:
                    continue
                ok = True
                for j, (jid, p) in enumerate(loop):
                    if j in ((i - 1) % n, i, (i + 1) % n):
                        continue
                    if _point_in_triangle(p, a, b, c, -AREA_EPS):
                        ok = False
                        break
                if ok:
                    if abs(cross) > AREA_EPS:
                        tris.append((ia, ib, ic))
                    del loop[i]
                    clipped = True
                    break
            if clipped:
                break
        if not clipped:
            raise ValueError("ear clipping failed; polygon may be self-intersecting")
    if len(loop) == 3:
        (ia, a), (ib, b), (ic, c) = loop
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(cross) > AREA_EPS:
            tris.append((ia, ib, ic))
    return all_pts, np.array(tris, int).reshape(-1, 3)


def prism(outer, holes, z0: float, z1: float) -> TriangleMesh:
    """Watertight extrusion of a polygon with holes from z0 to z1.

    ``outer`` must be CCW and each hole CW; z1 > z0.
    """
    if z1 <= z0:
        raise ValueError("prism needs z1 > z0")
    pts2, cap = triangulate_polygon(outer, holes)
    n = len(pts2)
    verts = np.zeros((2 * n, 3))
    verts[:n, :2] = pts2
    verts[:n, 2] = z0
    verts[n:, :2] = pts2
    verts[n:, 2] = z1
    tris = []
    for (a, b, c) in cap:
        tris.append((a, c, b))                 # bottom, normal -z
        tris.append((n + a, n + b, n + c))     # top, normal +z
    rings = [list(range(len(outer)))]
    off = len(outer)
    for h in holes:
        rings.append(list(range(off, off + len(h))))
        off += len(h)
    for ring in rings:
        m = len(ring)
        for i in range(m):
            a, b = ring[i], ring[(i + 1) % m]
            tris.append((a, b, n + b))
            tris.append((a, n + b, n + a))
    return TriangleMesh(verts, np.array(tris, int))


# ------------------------------------------------------------- binary STL

STL_HEADER = b"foldstring binary stl".ljust(80, b"\0")


def write_stl(mesh: TriangleMesh, target=None) -> bytes:
    """Serialize to binary STL; optionally also write to a path or file."""
    tris = mesh.triangles
    v = mesh.vertices
    blob = bytearray()
    blob += STL_HEADER
    blob += struct.pack("<I", len(tris))
    for t in tris:
        a, b, c = v[t[0]], v[t[1]], v[t[2]]
        nrm = np.cross(b - a, c - a)
        ln = np.linalg.norm(nrm)
        if ln > 0:
            nrm = nrm / ln
        blob += struct.pack("<3f", *nrm)
        blob += struct.pack("<3f", *a)
        blob += struct.pack("<3f", *b)
        blob += struct.pack("<3f", *c)
        blob += struct.pack("<H", 0)
    data = bytes(blob)
    if target is not None:
        if hasattr(target, "write"):
            target.write(data)
        else:
            try:
                with open(target, "wb") as fh:
                    fh.write(data)
            except OSError as e:
                raise OSError(f"cannot write STL to {target}: {e}") from e
    return data


def read_stl(data: bytes) -> TriangleMesh:
    """Parse binary STL back into a mesh (vertices stay per-triangle)."""
    if len(data) < 84:
        raise ValueError("binary STL must be at least 84 bytes")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + count * 50
    if len(data) < expected:
        raise ValueError(f"truncated STL: {len(data)} bytes, need {expected}")
    verts = np.zeros((3 * count, 3))
    tris = np.zeros((count, 3), int)
    for k in range(count):
        off = 84 + 50 * k
        vals = struct.unpack_from("<12f", data, off)
        verts[3 * k + 0] = vals[3:6]
        verts[3 * k + 1] = vals[6:9]
        verts[3 * k + 2] = vals[9:12]
        tris[k] = (3 * k, 3 * k + 1, 3 * k + 2)
    return TriangleMesh(verts, tris)


# ------------------------------------------------------------- diagnostics

@dataclass
class MeshReport:
    triangle_count: int
    watertight: bool
    consistent_orientation: bool
    boundary_edge_count: int
    nonmanifold_edge_count: int
    signed_volume: float
    bbox_min: tuple
    bbox_max: tuple
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.watertight and self.consistent_orientation and self.signed_volume > 0


def mesh_diagnostics(mesh: TriangleMesh, weld: float = 1e-7) -> MeshReport:
    """Edge-manifold, orientation and volume checks.

    Vertices are welded at ``weld`` resolution first so that meshes written
    as triangle soups (e.g. read back from STL) can be checked too.
    """
    if mesh.triangle_count == 0:
        return MeshReport(0, True, True, 0, 0, 0.0, (0, 0, 0), (0, 0, 0),
                          messages=["empty mesh"])
    key = np.round(mesh.vertices / weld).astype(np.int64)
    _, remap = np.unique(key, axis=0, return_inverse=True)
    tris = remap[mesh.triangles]

    edges = {}
    degenerate = 0
    for t in tris:
        if len(set(int(x) for x in t)) < 3:
            degenerate += 1
            continue
        for i in range(3):
            a, b = int(t[i]), int(t[(i + 1) % 3])
            key_e = (a, b) if a < b else (b, a)
            fwd = a < b
            cnt = edges.setdefault(key_e, [0, 0])
            cnt[0 if fwd else 1] += 1
    boundary = 0
    nonmanifold = 0
    consistent = True
    for (f, r) in edges.values():
        tot = f + r
        if tot == 1:
            boundary += 1
        elif tot > 2:
            nonmanifold += 1
        elif tot == 2 and (f != 1 or r != 1):
            consistent = False
    watertight = boundary == 0 and nonmanifold == 0 and degenerate == 0
    vol = mesh.signed_volume()
    lo, hi = mesh.bounding_box()
    messages = []
    if degenerate:
        messages.append(f"{degenerate} degenerate triangles")
    if boundary:
        messages.append(f"{boundary} boundary edges")
    if nonmanifold:
        messages.append(f"{nonmanifold} non-manifold edges")
    if not consistent:
        messages.append("inconsistent winding")
    if vol < 0:
        messages.append("negative signed volume (inverted orientation)")
    return MeshReport(
        triangle_count=mesh.triangle_count,
        watertight=watertight,
        consistent_orientation=consistent,
        boundary_edge_count=boundary,
        nonmanifold_edge_count=nonmanifold,
        signed_volume=vol,
        bbox_min=tuple(lo),
        bbox_max=tuple(hi),
        messages=messages,
    )


def box_mesh(size=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box, 12 triangles, outward orientation."""
    sx, sy, sz = size
    ox, oy, oz = origin
    outer = [(ox, oy), (ox + sx, oy), (ox + sx, oy + sy), (ox, oy + sy)]
    return prism(outer, (), oz, oz + sz)
