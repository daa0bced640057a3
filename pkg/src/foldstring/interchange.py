"""File interchange: DXF crease patterns, SVG drawings, project documents.

DXF support targets the ASCII R12 subset actually used for crease
patterns: LINE entities on layers named MOUNTAIN, VALLEY and BORDER (an
unnamed or "0" layer also reads as border).  LWPOLYLINE entities are
exploded into lines.  On import, endpoints are welded at 1e-3 mm and the
panel faces are recovered by walking the planar arrangement.

The project document is a versioned JSON file holding everything needed
to reproduce a session: design, pattern parameters or imported geometry,
optimization task, fabrication parameters and holes, string routing and
actuator configuration.  Unknown fields survive a load/save round trip.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fabrication import FabricationParams, Hole
from .geometry import Rect, seg_intersects
from .kinematics import AnchoredPoint
from .optimize import DesignTask
from .pattern import Crease, CreaseKind, CreasePattern, FoldGroup, synthesize_strip, tessellate
from .stringsim import RouteWaypoint, RoutingPlan, Side, StringRoute, TsaConfig
from .transition import EntryFlag, TransitionGraphDesign

DXF_WELD = 1e-3


class DxfImportError(ValueError):
    pass


def _dxf_pairs(text: str):
    lines = text.splitlines()
    if len(lines) % 2:
        lines = lines[:-1]
    for i in range(0, len(lines), 2):
        try:
            code = int(lines[i].strip())
        except ValueError as e:
            raise DxfImportError(f"bad group code at line {i + 1}: {lines[i]!r}") from e
        yield code, lines[i + 1].strip()


LAYER_TO_KIND = {
    "MOUNTAIN": CreaseKind.MOUNTAIN,
    "VALLEY": CreaseKind.VALLEY,
    "BORDER": CreaseKind.BORDER,
    "0": CreaseKind.BORDER,
}


def parse_dxf(data) -> CreasePattern:
    """Read a crease pattern from ASCII DXF (R12 subset).

    Returns a pattern whose panels are the bounded faces of the imported
    line arrangement; the import fails on crossing creases or unclosed
    faces.  Unsupported entity types are skipped (collected as warnings on
    the returned pattern object attribute ``import_warnings``).
    """
    if isinstance(data, bytes):
        text = data.decode("ascii", errors="replace")
    else:
        text = data
    pairs = list(_dxf_pairs(text))

    segments = []   # (start, end, kind)
    warnings = []
    in_entities = False
    i = 0
    while i < len(pairs):
        code, value = pairs[i]
        if code == 2 and value == "ENTITIES" and i > 0 and pairs[i - 1] == (0, "SECTION"):
            in_entities = True
            i += 1
            continue
        if in_entities and code == 0 and value == "ENDSEC":
            in_entities = False
            i += 1
            continue
        if in_entities and code == 0:
            etype = value
            fields = {}
            coords = []
            j = i + 1
            while j < len(pairs) and pairs[j][0] != 0:
                c, v = pairs[j]
                if c in (10, 20, 11, 21):
                    fields.setdefault(c, []).append(float(v))
                elif c == 8:
                    fields[8] = v
                elif c == 90:
                    fields[90] = int(v)
                elif c == 70:
                    fields[70] = int(v)
                j += 1
            layer = str(fields.get(8, "0"))
            kind = LAYER_TO_KIND.get(layer.upper())
            if etype == "LINE":
                try:
                    x1, y1 = fields[10][0], fields[20][0]
                    x2, y2 = fields[11][0], fields[21][0]
                except (KeyError, IndexError) as e:
                    raise DxfImportError(f"LINE entity missing coordinates near pair {i}") from e
                if kind is None:
                    warnings.append(f"layer {layer!r} not recognized; treating as border")
                    kind = CreaseKind.BORDER
                segments.append(((x1, y1), (x2, y2), kind))
            elif etype == "LWPOLYLINE":
                xs = fields.get(10, [])
                ys = fields.get(20, [])
                closed = bool(fields.get(70, 0) & 1)
                pts = list(zip(xs, ys))
                if kind is None:
                    warnings.append(f"layer {layer!r} not recognized; treating as border")
                    kind = CreaseKind.BORDER
                for a, b in zip(pts, pts[1:]):
                    segments.append((a, b, kind))
                if closed and len(pts) > 2:
                    segments.append((pts[-1], pts[0], kind))
            elif etype in ("SEQEND", "VERTEX", "POLYLINE"):
                warnings.append(f"entity {etype} skipped (only LINE/LWPOLYLINE supported)")
            else:
                warnings.append(f"entity {etype} skipped")
            i = j
            continue
        i += 1

    if not segments:
        raise DxfImportError("no LINE entities found in the ENTITIES section")
    pattern = _pattern_from_segments(segments)
    pattern.import_warnings = warnings
    return pattern


def _pattern_from_segments(segments) -> CreasePattern:
    index = {}
    coords = []

    def vid(p):
        key = (round(p[0] / DXF_WELD), round(p[1] / DXF_WELD))
        if key not in index:
            index[key] = len(coords)
            coords.append((float(p[0]), float(p[1])))
        return index[key]

    raw = []
    for a, b, kind in segments:
        ia, ib = vid(a), vid(b)
        if ia != ib:
            raw.append((ia, ib, kind))

    # split segments at vertices that lie on them (T junctions drawn as one
    # long line are common in hand-made files)
    verts = np.array(coords)
    seen = {}
    for ia, ib, kind in raw:
        p1, p2 = verts[ia], verts[ib]
        d = p2 - p1
        ln = float(np.hypot(*d))
        cuts = [(0.0, ia), (1.0, ib)]
        for vi in range(len(verts)):
            if vi in (ia, ib):
                continue
            t = float(np.dot(verts[vi] - p1, d)) / (ln * ln)
            if not (1e-9 < t < 1 - 1e-9):
                continue
            off = np.linalg.norm(verts[vi] - (p1 + t * d))
            if off <= DXF_WELD:
                cuts.append((t, vi))
        cuts.sort()
        for (t1, va), (t2, vb) in zip(cuts, cuts[1:]):
            key = (min(va, vb), max(va, vb))
            if key not in seen:
                seen[key] = kind
    # planarity: creases may only touch at shared endpoints
    keys = list(seen)
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            a, b = keys[i], keys[j]
            if set(a) & set(b):
                continue
            if seg_intersects(verts[a[0]], verts[a[1]], verts[b[0]], verts[b[1]], 1e-9):
                raise DxfImportError(
                    f"creases cross near {tuple(np.round((verts[a[0]] + verts[a[1]]) / 2, 3))}; "
                    f"split them at the intersection before importing")

    # dominant direction separates main from zigzag creases
    def line_angle(key):
        d = verts[key[1]] - verts[key[0]]
        return math.atan2(d[1], d[0]) % math.pi

    angles = [line_angle(k) for k in keys]
    hist = {}
    for a in angles:
        hist[round(a, 3)] = hist.get(round(a, 3), 0) + 1
    dominant = max(hist, key=hist.get)

    creases = []
    for key, a in zip(keys, angles):
        group = FoldGroup.MAIN if abs(a - dominant) < 1e-3 or \
            abs(abs(a - dominant) - math.pi) < 1e-3 else FoldGroup.ZIGZAG
        creases.append(Crease(key[0], key[1], seen[key], group))

    panels = _arrangement_faces(verts, [c.key() for c in creases])
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    return CreasePattern(vertices=verts, creases=creases, panels=panels,
                         unit_width=float(hi[1] - lo[1]), copy_count=1, meta=None)


def _arrangement_faces(verts, edges) -> list:
    """Bounded faces of a planar straight-line graph, as CCW vertex cycles."""
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v, ns in adj.items():
        if len(ns) < 2:
            raise DxfImportError(
                f"unclosed face: vertex at {tuple(np.round(verts[v], 3))} has a "
                f"dangling crease")
        ns.sort(key=lambda o: math.atan2(*(verts[o] - verts[v])[::-1]))

    visited = set()
    faces = []
    for a in sorted(adj):
        for b in adj[a]:
            if (a, b) in visited:
                continue
            cycle = []
            u, v = a, b
            while (u, v) not in visited:
                visited.add((u, v))
                cycle.append(u)
                ns = adj[v]
                k = ns.index(u)
                w = ns[(k - 1) % len(ns)]   # clockwise-next: traces faces CCW
                u, v = v, w
            pts = verts[np.array(cycle)]
            area = 0.5 * float(np.sum(pts[:, 0] * np.roll(pts[:, 1], -1)
                                      - pts[:, 1] * np.roll(pts[:, 0], -1)))
            if area > 1e-9:
                faces.append(cycle)
    if not faces:
        raise DxfImportError("no closed panel faces found")
    return faces


def export_dxf(pattern: CreasePattern) -> bytes:
    """ASCII DXF R12 with one LINE per crease on kind-named layers."""
    KIND_TO_LAYER = {CreaseKind.MOUNTAIN: "MOUNTAIN", CreaseKind.VALLEY: "VALLEY",
                     CreaseKind.BORDER: "BORDER"}
    out = io.StringIO()

    def pair(code, value):
        out.write(f"{code}\n{value}\n")

    pair(0, "SECTION")
    pair(2, "HEADER")
    pair(0, "ENDSEC")
    pair(0, "SECTION")
    pair(2, "TABLES")
    pair(0, "TABLE")
    pair(2, "LAYER")
    pair(70, 3)
    for name in ("MOUNTAIN", "VALLEY", "BORDER"):
        pair(0, "LAYER")
        pair(2, name)
        pair(70, 0)
        pair(62, 7)
        pair(6, "CONTINUOUS")
    pair(0, "ENDTAB")
    pair(0, "ENDSEC")
    pair(0, "SECTION")
    pair(2, "ENTITIES")
    for c in pattern.creases:
        p1 = pattern.vertices[c.v1]
        p2 = pattern.vertices[c.v2]
        pair(0, "LINE")
        pair(8, KIND_TO_LAYER[c.kind])
        pair(10, f"{p1[0]:.6f}")
        pair(20, f"{p1[1]:.6f}")
        pair(30, "0.0")
        pair(11, f"{p2[0]:.6f}")
        pair(21, f"{p2[1]:.6f}")
        pair(31, "0.0")
    pair(0, "ENDSEC")
    pair(0, "EOF")
    return out.getvalue().encode("ascii")


# ------------------------------------------------------------------- SVG

SVG_STYLES = {
    CreaseKind.MOUNTAIN: 'stroke="#cc2222" stroke-width="0.5"',
    CreaseKind.VALLEY: 'stroke="#2255cc" stroke-width="0.5" stroke-dasharray="3 2"',
    CreaseKind.BORDER: 'stroke="#111111" stroke-width="1.2"',
}


def export_svg(pattern: CreasePattern, margin: float = 5.0) -> bytes:
    """Deterministic SVG rendering, 1 unit per millimetre, y up."""
    if len(pattern.vertices):
        lo, hi = pattern.bounding_box()
    else:
        lo = hi = np.zeros(2)
    w = hi[0] - lo[0] + 2 * margin
    h = hi[1] - lo[1] + 2 * margin
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" '
              f'viewBox="0 0 {w:.3f} {h:.3f}" width="{w:.3f}mm" height="{h:.3f}mm">\n')
    out.write(f'<g transform="translate({margin - lo[0]:.3f},{hi[1] + margin:.3f}) scale(1,-1)" '
              f'fill="none" stroke-linecap="round">\n')
    for kind in (CreaseKind.BORDER, CreaseKind.MOUNTAIN, CreaseKind.VALLEY):
        out.write(f'<g {SVG_STYLES[kind]}>\n')
        for c in pattern.creases:
            if c.kind != kind:
                continue
            p1 = pattern.vertices[c.v1]
            p2 = pattern.vertices[c.v2]
            out.write(f'<line x1="{p1[0]:.4f}" y1="{p1[1]:.4f}" '
                      f'x2="{p2[0]:.4f}" y2="{p2[1]:.4f}"/>\n')
        out.write('</g>\n')
    out.write('</g>\n</svg>\n')
    return out.getvalue().encode("utf-8")


# --------------------------------------------------------------- project

PROJECT_VERSION = 1

_KNOWN_KEYS = {"version", "provenance", "design", "pattern", "task", "fab", "routing"}


class ProjectError(ValueError):
    pass


@dataclass
class Project:
    version: int = PROJECT_VERSION
    design: TransitionGraphDesign | None = None
    unit_width: float | None = None
    copies: int = 1
    imported: CreasePattern | None = None
    task: DesignTask | None = None
    fab: FabricationParams | None = None
    holes: list = field(default_factory=list)
    routing: RoutingPlan | None = None
    tsa: TsaConfig | None = None
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def pattern(self) -> CreasePattern:
        if self.imported is not None:
            return self.imported
        if self.design is None or self.unit_width is None:
            raise ProjectError("project has no design or imported pattern")
        return tessellate(synthesize_strip(self.design, self.unit_width), self.copies)

    def validate_references(self):
        try:
            pat = self.pattern()
        except ProjectError:
            if self.holes or self.routing:
                raise ProjectError(
                    "project references holes or routing without a pattern")
            return
        n = len(pat.panels)
        for h in self.holes:
            if not (0 <= h.anchor.panel < n):
                raise ProjectError(f"fab.holes: panel id {h.anchor.panel} out of range")
        if self.routing:
            for si, s in enumerate(self.routing.strings):
                for wi, w in enumerate(s.waypoints):
                    if not (0 <= w.hole.panel < n):
                        raise ProjectError(
                            f"routing.strings[{si}].waypoints[{wi}]: panel id "
                            f"{w.hole.panel} out of range")


def _design_to_dict(d: TransitionGraphDesign) -> dict:
    return {
        "start": list(d.start),
        "lengths": list(d.lengths),
        "shape_angles": list(d.shape_angles),
        "first_flag": "valley" if d.first_flag == EntryFlag.VALLEY else "mountain",
    }


def _design_from_dict(d: dict) -> TransitionGraphDesign:
    flag = EntryFlag.VALLEY if str(d.get("first_flag", "valley")).lower() == "valley" \
        else EntryFlag.MOUNTAIN
    return TransitionGraphDesign(
        lengths=tuple(d["lengths"]), shape_angles=tuple(d["shape_angles"]),
        first_flag=flag, start=tuple(d.get("start", (0.0, 0.0))))


def _pattern_to_dict(p: CreasePattern) -> dict:
    return {
        "vertices": [[float(x), float(y)] for x, y in p.vertices],
        "creases": [[c.v1, c.v2, c.kind.name.lower(), c.fold_group.name.lower()]
                    for c in p.creases],
        "panels": [list(map(int, f)) for f in p.panels],
        "unit_width": p.unit_width,
    }


def _pattern_from_dict(d: dict) -> CreasePattern:
    creases = [Crease(int(a), int(b), CreaseKind[k.upper()], FoldGroup[g.upper()])
               for a, b, k, g in d["creases"]]
    return CreasePattern(
        vertices=np.array(d["vertices"], float),
        creases=creases,
        panels=[list(map(int, f)) for f in d["panels"]],
        unit_width=float(d.get("unit_width", 0.0)),
        copy_count=1, meta=None)


def _task_to_dict(t: DesignTask) -> dict:
    return {
        "start_anchor": list(t.start_anchor),
        "waypoints": [list(w) for w in t.waypoints],
        "warning_regions": [r.to_dict() for r in t.warning_regions],
        "prohibited_regions": [r.to_dict() for r in t.prohibited_regions],
        "reward_weight": t.reward_weight,
        "unit_count": t.unit_count,
    }


def _task_from_dict(d: dict) -> DesignTask:
    return DesignTask(
        start_anchor=tuple(d.get("start_anchor", (0.0, 0.0))),
        waypoints=tuple(tuple(w) for w in d["waypoints"]),
        warning_regions=tuple(Rect.from_dict(r) for r in d.get("warning_regions", [])),
        prohibited_regions=tuple(Rect.from_dict(r) for r in d.get("prohibited_regions", [])),
        reward_weight=float(d.get("reward_weight", 120.0)),
        unit_count=int(d.get("unit_count", 5)),
    )


def project_to_dict(p: Project) -> dict:
    doc = dict(p.extra)
    doc["version"] = p.version
    if p.provenance:
        doc["provenance"] = p.provenance
    if p.design is not None:
        doc["design"] = _design_to_dict(p.design)
    pattern_doc = {}
    if p.unit_width is not None:
        pattern_doc["unit_width"] = p.unit_width
        pattern_doc["copies"] = p.copies
    if p.imported is not None:
        pattern_doc["imported"] = _pattern_to_dict(p.imported)
    if pattern_doc:
        doc["pattern"] = pattern_doc
    if p.task is not None:
        doc["task"] = _task_to_dict(p.task)
    fab_doc = {}
    if p.fab is not None:
        fab_doc["params"] = {
            "inner_bias": p.fab.inner_bias,
            "panel_height": p.fab.panel_height,
            "membrane_thickness": p.fab.membrane_thickness,
            "hole_radius": p.fab.hole_radius,
            "midlayer_extra_bias": p.fab.midlayer_extra_bias,
            "include_top_cover": p.fab.include_top_cover,
        }
    if p.holes:
        fab_doc["holes"] = [
            {"panel": h.anchor.panel, "position": list(h.anchor.position),
             "radius": h.radius} for h in p.holes]
    if fab_doc:
        doc["fab"] = fab_doc
    routing_doc = {}
    if p.tsa is not None:
        routing_doc["tsa"] = {
            "rotation_center": list(p.tsa.rotation_center),
            "rotation_diameter": p.tsa.rotation_diameter,
            "first_hole_gap": p.tsa.first_hole_gap,
            "string_width": p.tsa.string_width,
            "strings_per_unit": p.tsa.strings_per_unit,
        }
    if p.routing is not None:
        routing_doc["strings"] = [
            {
                "waypoints": [
                    {"panel": w.hole.panel, "position": list(w.hole.position),
                     "side": w.side.value if w.side else None}
                    for w in s.waypoints
                ],
                "initial_length": s.initial_length,
            }
            for s in p.routing.strings
        ]
    if routing_doc:
        doc["routing"] = routing_doc
    return doc


def project_from_dict(doc: dict) -> Project:
    if not isinstance(doc, dict):
        raise ProjectError("project document must be a JSON object")
    version = doc.get("version")
    if not isinstance(version, int) or version < 1:
        raise ProjectError("project: missing or invalid 'version'")
    if version > PROJECT_VERSION:
        raise ProjectError(f"project version {version} is newer than supported "
                           f"({PROJECT_VERSION})")
    p = Project(version=version)
    p.extra = {k: v for k, v in doc.items() if k not in _KNOWN_KEYS}
    p.provenance = dict(doc.get("provenance", {}))
    try:
        if "design" in doc:
            p.design = _design_from_dict(doc["design"])
        pat = doc.get("pattern", {})
        if "unit_width" in pat:
            p.unit_width = float(pat["unit_width"])
            p.copies = int(pat.get("copies", 1))
        if "imported" in pat:
            p.imported = _pattern_from_dict(pat["imported"])
        if "task" in doc:
            p.task = _task_from_dict(doc["task"])
        fab = doc.get("fab", {})
        if "params" in fab:
            p.fab = FabricationParams(**fab["params"])
        for h in fab.get("holes", []):
            p.holes.append(Hole(AnchoredPoint(int(h["panel"]), tuple(h["position"])),
                                float(h["radius"])))
        routing = doc.get("routing", {})
        if "tsa" in routing:
            t = routing["tsa"]
            p.tsa = TsaConfig(
                rotation_center=tuple(t["rotation_center"]),
                rotation_diameter=float(t["rotation_diameter"]),
                first_hole_gap=float(t["first_hole_gap"]),
                string_width=float(t["string_width"]),
                strings_per_unit=int(t.get("strings_per_unit", 2)),
            )
        if "strings" in routing:
            strings = []
            for s in routing["strings"]:
                wps = [RouteWaypoint(
                    AnchoredPoint(int(w["panel"]), tuple(w["position"])),
                    Side(w["side"]) if w.get("side") else None)
                    for w in s["waypoints"]]
                strings.append(StringRoute(wps, s.get("initial_length")))
            p.routing = RoutingPlan(strings=strings)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ProjectError):
            raise
        raise ProjectError(f"project: malformed field ({e})") from e
    p.validate_references()
    return p


def project_save(p: Project, target=None) -> bytes:
    data = (json.dumps(project_to_dict(p), indent=2, sort_keys=True) + "\n").encode("utf-8")
    if target is not None:
        if hasattr(target, "write"):
            target.write(data)
        else:
            with open(target, "wb") as fh:
                fh.write(data)
    return data


def project_load(source) -> Project:
    if hasattr(source, "read"):
        data = source.read()
    elif isinstance(source, (bytes, str)) and not _looks_like_json(source):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProjectError(f"project parse error at byte offset {e.pos}: {e.msg}") from e
    return project_from_dict(doc)


def _looks_like_json(s) -> bool:
    head = s[:64]
    if isinstance(head, bytes):
        head = head.decode("utf-8", errors="replace")
    return head.lstrip().startswith("{")
