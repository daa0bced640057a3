"""Thick-panel printable model generation.

The printed sandwich, per panel: two hard infill slabs (inset ``b`` from
the crease outline) above and below a hard mid-layer plate of thickness
``t`` (inset slightly deeper so the soft crease membranes have room), soft
crease strips of thickness ``t`` spanning the gaps between mid-layer
plates, and soft shell skins over the gaps and panel rims on the top and
bottom faces.  String holes are drilled through slabs and plate.

Hinging two slabs of height (h-t)/2 over a 2b gap limits the fold:
theta_max = 2*atan(2b / (h - t)).

``generate_meshes`` emits the four part meshes; each is watertight and the
four never share interior volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import InsetError, inset_convex, point_in_polygon, polygon_centroid
from .kinematics import AnchoredPoint
from .mesh import TriangleMesh, empty_mesh, merge_meshes, mesh_diagnostics, prism, write_stl
from .pattern import CreaseKind, CreasePattern

HOLE_MARGIN = 0.5
HOLE_SEGMENTS = 48


@dataclass(frozen=True)
class FabricationParams:
    inner_bias: float                 # b
    panel_height: float               # h
    membrane_thickness: float         # t
    hole_radius: float = 1.5
    midlayer_extra_bias: float = 0.2
    hole_margin: float = HOLE_MARGIN
    hole_segments: int = HOLE_SEGMENTS
    include_top_cover: bool = True

    def __post_init__(self):
        if self.inner_bias <= 0:
            raise ValueError("inner bias must be positive")
        if not (self.panel_height > self.membrane_thickness > 0):
            raise ValueError("need panel height > membrane thickness > 0")
        if self.hole_radius < 0:
            raise ValueError("hole radius must be non-negative")
        if self.midlayer_extra_bias <= 0:
            raise ValueError("mid-layer extra bias must be positive")
        if self.midlayer_extra_bias >= self.hole_margin:
            raise ValueError("mid-layer extra bias must stay below the hole margin")
        if self.hole_segments < 8:
            raise ValueError("hole circles need at least 8 segments")


def max_fold_angle(params: FabricationParams) -> float:
    """Largest main-crease fold angle the thick panels allow."""
    denom = params.panel_height - params.membrane_thickness
    if denom <= 0:
        return math.pi
    return 2 * math.atan(2 * params.inner_bias / denom)


def inset_panel(polygon, bias: float, panel_id: int | None = None) -> np.ndarray:
    """Parallel-edge inset of one panel outline."""
    try:
        return inset_convex(polygon, bias)
    except InsetError as e:
        name = f"panel {panel_id}" if panel_id is not None else "panel"
        raise InsetError(f"{name}: {e}") from e


def operation_region(polygon, params: FabricationParams,
                     panel_id: int | None = None):
    """Area where hole centers may be placed, or None when it vanishes."""
    total = params.inner_bias + params.hole_radius + params.hole_margin
    try:
        return inset_panel(polygon, total, panel_id)
    except InsetError:
        return None


@dataclass(frozen=True)
class Hole:
    anchor: AnchoredPoint
    radius: float


class HolePlacementError(ValueError):
    pass


def place_holes(pattern: CreasePattern, params: FabricationParams,
                manual=None) -> list:
    """Hole list: centers of all panels (auto) or validated manual spots.

    ``manual`` is a list of (panel_id, (x, y)); when None, one hole goes at
    each panel centroid whose operation region exists and contains it.
    """
    holes = []
    if manual is None:
        for pid in range(len(pattern.panels)):
            poly = pattern.panel_polygon(pid)
            region = operation_region(poly, params, pid)
            if region is None:
                continue
            c = polygon_centroid(poly)
            if point_in_polygon(c, region):
                holes.append(Hole(AnchoredPoint(pid, (float(c[0]), float(c[1]))),
                                  params.hole_radius))
        return holes
    for pid, xy in manual:
        if not (0 <= pid < len(pattern.panels)):
            raise HolePlacementError(f"unknown panel id {pid}")
        poly = pattern.panel_polygon(pid)
        region = operation_region(poly, params, pid)
        if region is None:
            raise HolePlacementError(
                f"panel {pid}: operation region is empty, holes not allowed")
        if not point_in_polygon(xy, region):
            from .geometry import distance_point_to_polygon
            d = distance_point_to_polygon(xy, region)
            raise HolePlacementError(
                f"panel {pid}: hole at {tuple(xy)} lies {d:.3f} mm outside "
                f"the operation region")
        holes.append(Hole(AnchoredPoint(pid, (float(xy[0]), float(xy[1]))), params.hole_radius))
    return holes


@dataclass
class FabricationModel:
    params: FabricationParams
    holes: list
    meshes: dict          # name -> TriangleMesh
    warnings: list = field(default_factory=list)

    MESH_NAMES = ("infills", "mid_layers", "shells", "creases")

    def write_stl_files(self, directory) -> list:
        """Write the four part files; returns their paths."""
        import os
        paths = []
        for name in self.MESH_NAMES:
            path = os.path.join(str(directory), f"{name}.stl")
            write_stl(self.meshes[name], path)
            paths.append(path)
        return paths

    def diagnostics(self) -> dict:
        return {name: mesh_diagnostics(m) for name, m in self.meshes.items()}


def _hole_ring(center, radius: float, segments: int):
    """Clockwise circle polygon (hole orientation)."""
    cx, cy = center
    ang = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    return [(cx + radius * math.cos(a), cy - radius * math.sin(a)) for a in ang]


def _pattern_outline(pattern: CreasePattern):
    """Border cycle of the pattern, CCW."""
    border = [c for c in pattern.creases if c.kind == CreaseKind.BORDER]
    if not border:
        raise ValueError("pattern has no border creases")
    nxt = {}
    for c in border:
        nxt.setdefault(c.v1, []).append(c.v2)
        nxt.setdefault(c.v2, []).append(c.v1)
    for v, ns in nxt.items():
        if len(ns) != 2:
            raise ValueError(f"border is not a single closed cycle at vertex {v}")
    start = border[0].v1
    cycle = [start]
    prev, cur = None, start
    while True:
        a, b = nxt[cur]
        step = a if a != prev else b
        if step == start:
            break
        cycle.append(step)
        prev, cur = cur, step
    pts = pattern.vertices[np.array(cycle)]
    area = 0.5 * float(np.sum(pts[:, 0] * np.roll(pts[:, 1], -1)
                              - pts[:, 1] * np.roll(pts[:, 0], -1)))
    if area < 0:
        cycle.reverse()
        pts = pts[::-1]
    return [tuple(p) for p in pts]


def generate_meshes(pattern: CreasePattern, params: FabricationParams,
                    holes) -> FabricationModel:
    """Build the four printable part meshes for a validated pattern."""
    from .pattern import validate_pattern
    rep = validate_pattern(pattern)
    if rep.planarity_violations:
        raise ValueError(f"pattern is not planar: {rep.messages[:3]}")

    warnings = []
    b = params.inner_bias
    h = params.panel_height
    t = params.membrane_thickness
    extra = params.midlayer_extra_bias

    # vertices with more than 4 incident folding creases: the fold limit
    # formula does not cover multi-layer constraints there
    incident = {}
    for c in pattern.creases:
        if c.kind == CreaseKind.BORDER:
            continue
        incident[c.v1] = incident.get(c.v1, 0) + 1
        incident[c.v2] = incident.get(c.v2, 0) + 1
    for v, deg in sorted(incident.items()):
        if deg > 4:
            warnings.append(
                f"vertex {v} joins {deg} creases; the fold-angle limit is "
                f"not guaranteed there")

    holes_by_panel: dict = {}
    for hole in holes:
        hole.anchor.validate(pattern)
        holes_by_panel.setdefault(hole.anchor.panel, []).append(hole)

    infill_parts = []
    mid_parts = []
    infill_insets = []
    mid_insets = []
    for pid in range(len(pattern.panels)):
        poly = pattern.panel_polygon(pid)
        inner = inset_panel(poly, b, pid)
        mid = inset_panel(poly, b + extra, pid)
        infill_insets.append(inner)
        mid_insets.append(mid)
        rings = []
        for hole in holes_by_panel.get(pid, []):
            ring = _hole_ring(hole.anchor.position, hole.radius, params.hole_segments)
            rings.append(ring)
        outer_ring = [tuple(p) for p in inner]
        mid_ring = [tuple(p) for p in mid]
        infill_parts.append(prism(outer_ring, rings, t / 2, h / 2))
        infill_parts.append(prism(outer_ring, rings, -h / 2, -t / 2))
        mid_parts.append(prism(mid_ring, rings, -t / 2, t / 2))

    crease_parts = []
    half_w = b + extra
    fan_angles = _vertex_crease_angles(pattern)
    for chain in _collinear_crease_chains(pattern):
        p1 = pattern.vertices[chain[0]]
        p2 = pattern.vertices[chain[-1]]
        d = p2 - p1
        ln = float(np.hypot(*d))
        d = d / ln
        nrm = np.array([-d[1], d[0]])
        # micron-scale clearance keeps mitered strips from exact contact
        trim1 = _miter_trim(fan_angles, chain, chain[0], half_w, pattern) + 5e-3
        trim2 = _miter_trim(fan_angles, chain, chain[-1], half_w, pattern) + 5e-3
        if trim1 + trim2 >= ln:
            warnings.append(
                f"crease run {chain[0]}..{chain[-1]} too short for its membrane strip")
            continue
        a = p1 + d * trim1
        bpt = p2 - d * trim2
        quad = [tuple(a - nrm * half_w), tuple(bpt - nrm * half_w),
                tuple(bpt + nrm * half_w), tuple(a + nrm * half_w)]
        crease_parts.append(prism(quad, (), -t / 2, t / 2))

    outline = _pattern_outline(pattern)
    shell_holes = [[tuple(p) for p in reversed(ins)] for ins in infill_insets]
    skin = min(t, (h - t) / 2)
    shell_parts = [prism(outline, shell_holes, -h / 2, -h / 2 + skin)]
    if params.include_top_cover:
        shell_parts.append(prism(outline, shell_holes, h / 2 - skin, h / 2))

    model = FabricationModel(
        params=params,
        holes=list(holes),
        meshes={
            "infills": merge_meshes(infill_parts),
            "mid_layers": merge_meshes(mid_parts),
            "shells": merge_meshes(shell_parts),
            "creases": merge_meshes(crease_parts) if crease_parts else empty_mesh(),
        },
        warnings=warnings,
    )
    return model


def _vertex_crease_angles(pattern: CreasePattern) -> dict:
    """vertex -> list of (crease key, outgoing angle); border creases are
    included so membrane strips also get mitered against the outline."""
    fans: dict = {}
    for c in pattern.creases:
        for v, o in ((c.v1, c.v2), (c.v2, c.v1)):
            d = pattern.vertices[o] - pattern.vertices[v]
            fans.setdefault(v, []).append((c.key(), math.atan2(d[1], d[0])))
    return fans


def _collinear_crease_chains(pattern: CreasePattern) -> list:
    """Maximal runs of collinear, vertex-connected folding creases.

    One membrane strip is printed per run (the soft layer is continuous
    along a straight crease line).  Each run is returned as an ordered
    vertex path [v0, v1, ..., vk].
    """
    folding = [c for c in pattern.creases if c.kind != CreaseKind.BORDER]
    by_vertex: dict = {}
    for idx, c in enumerate(folding):
        by_vertex.setdefault(c.v1, []).append(idx)
        by_vertex.setdefault(c.v2, []).append(idx)

    def direction(c):
        d = pattern.vertices[c.v2] - pattern.vertices[c.v1]
        return d / np.hypot(*d)

    parent = list(range(len(folding)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for v, idxs in by_vertex.items():
        for i in idxs:
            for j in idxs:
                if j <= i:
                    continue
                di, dj = direction(folding[i]), direction(folding[j])
                if abs(di[0] * dj[1] - di[1] * dj[0]) < 1e-9:
                    parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(len(folding)):
        groups.setdefault(find(i), []).append(i)
    chains = []
    for idxs in groups.values():
        ends: dict = {}
        for i in idxs:
            for v in (folding[i].v1, folding[i].v2):
                ends[v] = ends.get(v, 0) + 1
        terminals = sorted(v for v, k in ends.items() if k == 1)
        # order the run by distance along the line
        d0 = direction(folding[idxs[0]])
        verts = sorted(ends, key=lambda v: float(np.dot(pattern.vertices[v], d0)))
        if len(terminals) != 2:
            # a closed or branched collinear set should not happen; emit
            # per-crease strips as a fallback
            for i in idxs:
                chains.append([folding[i].v1, folding[i].v2])
            continue
        chains.append(verts)
    return chains


def _miter_trim(fans: dict, chain, vertex: int, half_w: float,
                pattern: CreasePattern) -> float:
    """Strip shortening at a run endpoint so neighboring strips and the
    pattern outline are never overlapped."""
    entries = fans.get(vertex, [])
    if len(entries) <= 1:
        return 0.0
    p1 = pattern.vertices[chain[0]]
    p2 = pattern.vertices[chain[-1]]
    d = p2 - p1
    a0 = math.atan2(d[1], d[0])
    if vertex == chain[0]:
        a0 = math.atan2(-d[1], -d[0])
    a0 = (a0 + math.pi) % (2 * math.pi) - math.pi
    chain_pairs = {(min(a, b), max(a, b)) for a, b in zip(chain, chain[1:])}
    worst = 0.0
    for k, a in entries:
        if k in chain_pairs:
            continue
        gamma = abs((a - (a0 + math.pi)) % (2 * math.pi))
        gamma = min(gamma, 2 * math.pi - gamma)
        if gamma < 1e-9 or abs(gamma - math.pi) < 1e-9:
            continue
        worst = max(worst, half_w / math.tan(gamma / 2))
    return worst


def infill_volume_analytic(pattern: CreasePattern, params: FabricationParams,
                           holes) -> float:
    """Exact volume of the infill mesh, from polygon areas."""
    from .geometry import polygon_area
    b = params.inner_bias
    height = params.panel_height - params.membrane_thickness
    per_hole = 0.5 * params.hole_segments * math.sin(2 * math.pi / params.hole_segments)
    total = 0.0
    holes_by_panel: dict = {}
    for hole in holes:
        holes_by_panel.setdefault(hole.anchor.panel, []).append(hole)
    for pid in range(len(pattern.panels)):
        area = abs(polygon_area(inset_panel(pattern.panel_polygon(pid), b, pid)))
        for hole in holes_by_panel.get(pid, []):
            area -= per_hole * hole.radius ** 2
        total += area * height
    return total
