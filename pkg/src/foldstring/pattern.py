"""Flat crease patterns for Miura origami strips.

``synthesize_strip`` lays out one tessellation row for a transition-graph
design; ``tessellate`` stacks mirrored copies.  Layout convention, with the
strip axis along +x and unit width w:

* the main crease of unit i runs mid-height, from apex (A_i, w/2) to
  (A_{i+1}, w/2) where A_i is the cumulative length;
* the zigzag crease between units i-1 and i is a chevron: apex on the main
  line, two arms to the strip edges at x = A_i + (w/2)/tan(beta_i), so each
  arm line makes angle beta_i with the strip axis;
* a leading half-width column (the half-unit cell) closes the strip start:
  a stub crease continues the main line to the left edge and two diagonals
  at 45 degrees join the attach point to the strip corners.

Crease kinds: unit mains carry the design's entry flag in every row, seam
lines between rows carry the flipped flag, and each chevron's arms carry
the single kind that lets the vertex fold rigidly (they never flip across
rows).  Validation checks developability, Kawasaki, Maekawa and planarity
at every interior vertex.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import EPS, is_convex, polygon_area, seg_intersects
from .transition import EntryFlag, TransitionGraphDesign

WELD = 1e-9


class CreaseKind(enum.IntEnum):
    MOUNTAIN = 0
    VALLEY = 1
    BORDER = 2


class FoldGroup(enum.IntEnum):
    MAIN = 0      # parallel to the transition vectors
    ZIGZAG = 1


def _flip(kind: CreaseKind) -> CreaseKind:
    if kind == CreaseKind.BORDER:
        return kind
    return CreaseKind.MOUNTAIN if kind == CreaseKind.VALLEY else CreaseKind.VALLEY


@dataclass(frozen=True)
class Crease:
    v1: int
    v2: int
    kind: CreaseKind
    fold_group: FoldGroup

    def __post_init__(self):
        if self.v1 == self.v2:
            raise ValueError("crease endpoints must be distinct")

    def key(self):
        return (self.v1, self.v2) if self.v1 < self.v2 else (self.v2, self.v1)


@dataclass(frozen=True)
class StripMeta:
    """Synthesis parameters kept on the pattern for downstream modules."""

    design: TransitionGraphDesign
    unit_width: float
    apex_x: tuple
    feet_x: tuple


@dataclass
class CreasePattern:
    vertices: np.ndarray          # (m, 2) mm
    creases: list                 # of Crease
    panels: list                  # of vertex-id lists, CCW
    unit_width: float
    copy_count: int
    meta: StripMeta | None = None

    def crease_map(self) -> dict:
        return {c.key(): c for c in self.creases}

    def boundary_vertex_ids(self) -> set:
        out = set()
        for c in self.creases:
            if c.kind == CreaseKind.BORDER:
                out.add(c.v1)
                out.add(c.v2)
        return out

    def bounding_box(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    def panel_polygon(self, pid: int) -> np.ndarray:
        return self.vertices[np.array(self.panels[pid])]


class StripGeometryError(ValueError):
    """The design produces a self-overlapping strip."""


class _VertexPool:
    def __init__(self):
        self.index = {}
        self.coords = []

    def vid(self, x: float, y: float) -> int:
        key = (round(x / WELD) * WELD, round(y / WELD) * WELD)
        if key not in self.index:
            self.index[key] = len(self.coords)
            self.coords.append((x, y))
        return self.index[key]


def arm_fold_multiplier(beta: float) -> float:
    """Ratio tan(arm_fold/2) / tan(theta/2) at a chevron of shape angle beta
    whose right-hand main folds +theta (valley)."""
    return -1.0 / math.cos(beta)


def _arm_kind(beta: float, right_main_kind: CreaseKind) -> CreaseKind:
    s_main = 1 if right_main_kind == CreaseKind.VALLEY else -1
    s_arm = (1 if arm_fold_multiplier(beta) > 0 else -1) * s_main
    return CreaseKind.VALLEY if s_arm > 0 else CreaseKind.MOUNTAIN


CAP_DIAG_ANGLE = 3 * math.pi / 4


def synthesize_strip(design: TransitionGraphDesign, unit_width: float) -> CreasePattern:
    """One tessellation row for the design.  Raises StripGeometryError when a
    chevron reaches past an adjacent unit and the panels would overlap."""
    return _build(design, unit_width, copies=1)


def tessellate(strip: CreasePattern, copies: int) -> CreasePattern:
    """Mirror/stack a synthesized strip across its long boundary."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if copies == 1:
        return strip
    if strip.meta is None:
        raise ValueError("tessellate needs a synthesized strip (no synthesis metadata)")
    if strip.copy_count != 1:
        raise ValueError("tessellate expects a single-row strip")
    return _build(strip.meta.design, strip.meta.unit_width, copies)


def _build(design: TransitionGraphDesign, w: float, copies: int) -> CreasePattern:
    if w <= 0:
        raise ValueError("unit width must be positive")
    n = design.unit_count
    lengths = design.lengths
    betas = design.shape_angles
    flags = design.flags()
    apex_x = np.concatenate([[0.0], np.cumsum(lengths)])
    feet_x = [apex_x[j + 1] + (w / 2) / math.tan(betas[j]) for j in range(n)]
    total = apex_x[-1]

    main_kind = [CreaseKind.VALLEY if f == EntryFlag.VALLEY else CreaseKind.MOUNTAIN
                 for f in flags]
    arm_kind = [_arm_kind(betas[j], main_kind[j + 1]) for j in range(n)]
    stub_kind = _flip(main_kind[0])
    cap_diag_kind = _arm_kind(CAP_DIAG_ANGLE, main_kind[0])

    pool = _VertexPool()
    creases: dict = {}
    panels: list = []

    def add(a: int, b: int, kind: CreaseKind, group: FoldGroup):
        key = (a, b) if a < b else (b, a)
        if key in creases:
            return
        creases[key] = Crease(key[0], key[1], kind, group)

    def gy(y_local: float, r: int) -> float:
        """Row-local y in [0, w] to global (odd rows mirrored)."""
        return r * w + (y_local if r % 2 == 0 else w - y_local)

    for r in range(copies):
        P = [pool.vid(apex_x[i], gy(w / 2, r)) for i in range(n + 2)]
        Ft = [pool.vid(feet_x[j], gy(w, r)) for j in range(n)]
        Fb = [pool.vid(feet_x[j], gy(0.0, r)) for j in range(n)]
        Ctl = pool.vid(-w / 2, gy(w, r))
        Cbl = pool.vid(-w / 2, gy(0.0, r))
        Cml = pool.vid(-w / 2, gy(w / 2, r))
        Rt = pool.vid(total, gy(w, r))
        Rb = pool.vid(total, gy(0.0, r))

        add(Cml, P[0], stub_kind, FoldGroup.MAIN)
        add(P[0], Ctl, cap_diag_kind, FoldGroup.ZIGZAG)
        add(P[0], Cbl, cap_diag_kind, FoldGroup.ZIGZAG)
        for i in range(n + 1):
            add(P[i], P[i + 1], main_kind[i], FoldGroup.MAIN)
        for j in range(n):
            add(P[j + 1], Ft[j], arm_kind[j], FoldGroup.ZIGZAG)
            add(P[j + 1], Fb[j], arm_kind[j], FoldGroup.ZIGZAG)

        # horizontal boundaries: seams between rows, borders at the outside
        for y_local, ids in ((w, [Ctl] + Ft + [Rt]), (0.0, [Cbl] + Fb + [Rb])):
            gy_val = gy(y_local, r)
            outer = gy_val < WELD or gy_val > copies * w - WELD
            for i in range(n + 1):
                if outer:
                    add(ids[i], ids[i + 1], CreaseKind.BORDER, FoldGroup.MAIN)
                else:
                    add(ids[i], ids[i + 1], _flip(main_kind[i]), FoldGroup.MAIN)

        # left and right borders
        add(Cml, Ctl, CreaseKind.BORDER, FoldGroup.ZIGZAG)
        add(Cml, Cbl, CreaseKind.BORDER, FoldGroup.ZIGZAG)
        add(P[n + 1], Rt, CreaseKind.BORDER, FoldGroup.ZIGZAG)
        add(P[n + 1], Rb, CreaseKind.BORDER, FoldGroup.ZIGZAG)

        up = r % 2 == 0

        def face(ids):
            panels.append(ids if up else list(reversed(ids)))

        face([Cml, P[0], Ctl])
        face([Cbl, P[0], Cml])
        for i in range(n + 1):
            lt = Ctl if i == 0 else Ft[i - 1]
            rt = Rt if i == n else Ft[i]
            face([P[i], P[i + 1], rt, lt])
            lb = Cbl if i == 0 else Fb[i - 1]
            rb = Rb if i == n else Fb[i]
            face([lb, rb, P[i + 1], P[i]])

    verts = np.array(pool.coords)
    pat = CreasePattern(
        vertices=verts,
        creases=list(creases.values()),
        panels=panels,
        unit_width=w,
        copy_count=copies,
        meta=StripMeta(design=design, unit_width=w,
                       apex_x=tuple(apex_x), feet_x=tuple(feet_x)),
    )
    _check_strip_geometry(pat, n)
    return pat


def _check_strip_geometry(pat: CreasePattern, n: int):
    per_row = 2 + 2 * (n + 1)
    for pid, ids in enumerate(pat.panels):
        poly = pat.vertices[np.array(ids)]
        if len(set(ids)) != len(ids) or not is_convex(poly, EPS):
            unit = (pid % per_row - 2) // 2
            row = pid // per_row
            raise StripGeometryError(
                f"unit {unit} (row {row}) produces a degenerate or overlapping panel; "
                f"the chevron offset exceeds what the adjacent lengths allow")


@dataclass
class VertexReport:
    vertex: int
    degree: int
    developability_residual: float
    kawasaki_residual: float
    maekawa_delta: int
    ok: bool


@dataclass
class ValidationReport:
    ok: bool
    vertex_reports: list = field(default_factory=list)
    planarity_violations: list = field(default_factory=list)
    messages: list = field(default_factory=list)


ANGLE_TOL = 1e-9


def validate_pattern(pattern: CreasePattern) -> ValidationReport:
    """Check flat-foldability conditions at every interior vertex plus global
    planarity.  Always returns a report; failures are listed, not raised."""
    report = ValidationReport(ok=True)
    verts = pattern.vertices
    incident: dict = {}
    for c in pattern.creases:
        incident.setdefault(c.v1, []).append(c)
        incident.setdefault(c.v2, []).append(c)

    boundary = pattern.boundary_vertex_ids()
    for v, cs in sorted(incident.items()):
        if v in boundary:
            continue
        dirs = []
        m_count = 0
        v_count = 0
        for c in cs:
            other = c.v2 if c.v1 == v else c.v1
            d = verts[other] - verts[v]
            dirs.append(math.atan2(d[1], d[0]))
            if c.kind == CreaseKind.MOUNTAIN:
                m_count += 1
            elif c.kind == CreaseKind.VALLEY:
                v_count += 1
        dirs.sort()
        sectors = [dirs[(i + 1) % len(dirs)] - dirs[i] for i in range(len(dirs))]
        sectors = [s + 2 * math.pi if s <= 0 else s for s in sectors]
        dev = abs(sum(sectors) - 2 * math.pi)
        if len(sectors) % 2 == 0:
            kaw = abs(sum(sectors[0::2]) - sum(sectors[1::2]))
        else:
            kaw = math.inf
        mae = abs(m_count - v_count)
        ok = dev <= ANGLE_TOL and kaw <= ANGLE_TOL and mae == 2
        if not ok:
            report.ok = False
            report.messages.append(
                f"vertex {v}: degree={len(cs)} dev={dev:.2e} kawasaki={kaw:.2e} "
                f"|M-V|={mae}")
        report.vertex_reports.append(VertexReport(
            vertex=v, degree=len(cs), developability_residual=dev,
            kawasaki_residual=kaw, maekawa_delta=mae, ok=ok))

    # planarity: creases only meet at shared endpoints
    cs = pattern.creases
    for i in range(len(cs)):
        for j in range(i + 1, len(cs)):
            a, b = cs[i], cs[j]
            if {a.v1, a.v2} & {b.v1, b.v2}:
                continue
            if seg_intersects(verts[a.v1], verts[a.v2], verts[b.v1], verts[b.v2], 1e-9):
                report.ok = False
                report.planarity_violations.append((a.key(), b.key()))
                report.messages.append(f"creases {a.key()} and {b.key()} cross")
    return report


def pattern_area(pattern: CreasePattern) -> float:
    """Total area of all panels."""
    return float(sum(abs(polygon_area(pattern.panel_polygon(i)))
                     for i in range(len(pattern.panels))))
