"""Twisted-string actuation and quasi-static folding simulation.

A twisted string actuator (TSA) spins a pair of strings; twisting consumes
string length between the motor and the first entry holes.  With the total
string length fixed, the structure must fold (shortening the hole-to-hole
segments) or move to keep every string within its initial length: the
displacement-constraint principle.  A simulation walks a twist schedule
and finds, at each step, the smallest fold angle (never unfolding) at
which every string constraint is satisfiable; when no fold angle within
the fabrication limit works, the previous state is the final one.

String length consumed between motor and first holes at twist angle t:

  t < pi :  sqrt(off^2 + ((d2 - d1 cos t)^2 + (d1 sin t)^2) / 4)
  t >= pi:  sqrt(off^2 + (d2 + d1 + (t - pi) ds)^2 / 4)

with off the motor-to-hole-midpoint distance (recomputed from the folded
geometry each step), d1 the rotation diameter, d2 the gap between the
pair's first holes and ds the string width.  The two branches agree at pi.

Strings are straight frictionless segments between hole centers; a side
flag (above/below the sheet) marks how a segment passes each crease it
crosses: below mountain creases, above valley creases, so the string can
pull the fold closed instead of being pinched on the ridge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .fabrication import FabricationParams, max_fold_angle
from .geometry import seg_intersection_point
from .kinematics import AnchoredPoint, FoldedGeometry, embed_fold
from .pattern import CreaseKind, CreasePattern

SLACK_TOL = 1e-6
THETA_CAP = math.pi - 1e-6


class Side(enum.Enum):
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class TsaConfig:
    rotation_center: tuple          # (x, y) on the rail plane
    rotation_diameter: float        # d_1
    first_hole_gap: float           # d_2
    string_width: float             # d_s
    strings_per_unit: int = 2

    def __post_init__(self):
        if self.rotation_diameter <= 0 or self.first_hole_gap <= 0 \
                or self.string_width <= 0:
            raise ValueError("TSA dimensions must be positive")
        if self.strings_per_unit < 2 or self.strings_per_unit % 2:
            raise ValueError("strings per unit must be a positive even number")


def tsa_segment_length(config: TsaConfig, anchor_offset: float,
                       twist: float, hole_gap: float | None = None) -> float:
    """String length consumed between the motor and a first-entry hole."""
    if twist < 0:
        raise ValueError("twist angle must be non-negative")
    d1 = config.rotation_diameter
    d2 = config.first_hole_gap if hole_gap is None else hole_gap
    ds = config.string_width
    if twist < math.pi:
        quad = (d2 - d1 * math.cos(twist)) ** 2 + (d1 * math.sin(twist)) ** 2
    else:
        quad = (d2 + d1 + (twist - math.pi) * ds) ** 2
    return math.sqrt(anchor_offset ** 2 + quad / 4.0)


@dataclass
class RouteWaypoint:
    hole: AnchoredPoint
    side: Side | None = None     # how the segment arriving here passes creases


@dataclass
class StringRoute:
    waypoints: list
    initial_length: float | None = None

    def __post_init__(self):
        if len(self.waypoints) < 1:
            raise ValueError("a string needs at least one hole")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a.hole.panel == b.hole.panel and a.hole.position == b.hole.position:
                raise ValueError("consecutive waypoints must be distinct holes")


@dataclass
class RoutingPlan:
    strings: list                   # of StringRoute
    pair_hole_gaps: list = field(default_factory=list)   # measured d2 per pair
    setup_warnings: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.strings) % 2:
            raise ValueError("strings are twisted in pairs; need an even count")

    @property
    def pairs(self):
        return [(2 * k, 2 * k + 1) for k in range(len(self.strings) // 2)]


@dataclass(frozen=True)
class QuasiStaticState:
    index: int
    twist_angle: float
    fold_theta: float
    rigid_pose: tuple                       # (tx, ty, rotation)
    tsa_side_lengths: tuple                 # per string
    segment_lengths: tuple                  # per string: tuple of distances
    slacks: tuple                           # per string

    def total_length(self, k: int) -> float:
        return self.tsa_side_lengths[k] + sum(self.segment_lengths[k])


class RoutingSetupError(ValueError):
    pass


def _pose_matrix(pose):
    tx, ty, rot = pose
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    t = np.array([tx, ty, 0.0])
    return R, t


def _hole_positions(folded: FoldedGeometry, route: StringRoute, pose) -> np.ndarray:
    R, t = _pose_matrix(pose)
    pts = np.array([folded.point_world(w.hole.panel, w.hole.position)
                    for w in route.waypoints])
    return pts @ R.T + t


def _center3(config: TsaConfig) -> np.ndarray:
    return np.array([config.rotation_center[0], config.rotation_center[1], 0.0])


def measure_initial_lengths(plan: RoutingPlan, flat_geometry: FoldedGeometry,
                            config: TsaConfig) -> RoutingPlan:
    """Fill per-string initial lengths from the flat state (strings tight).

    Also measures each pair's first-hole gap for the twist formula and
    records a warning when the formula's zero-twist value disagrees with
    the straight-line motor-to-hole distance (they differ unless the
    rotation diameter equals the hole gap).
    """
    if flat_geometry.theta != 0.0:
        raise RoutingSetupError("initial lengths are measured on the flat state")
    center = _center3(config)
    warnings = []
    gaps = []
    strings = [StringRoute(list(r.waypoints), r.initial_length) for r in plan.strings]
    for (i, j) in plan.pairs:
        pi = _hole_positions(flat_geometry, strings[i], (0, 0, 0))
        pj = _hole_positions(flat_geometry, strings[j], (0, 0, 0))
        gap = float(np.linalg.norm(pi[0] - pj[0]))
        gaps.append(gap)
        offset = float(np.linalg.norm((pi[0] + pj[0]) / 2 - center))
        lab0 = tsa_segment_length(config, offset, 0.0, hole_gap=gap)
        for k, pts in ((i, pi), (j, pj)):
            straight = float(np.linalg.norm(pts[0] - center))
            if abs(lab0 - straight) > 1e-9:
                warnings.append(
                    f"string {k}: zero-twist formula length {lab0:.6f} differs "
                    f"from straight-line distance {straight:.6f} "
                    f"(rotation diameter != hole gap)")
            segs = [float(np.linalg.norm(pts[m + 1] - pts[m]))
                    for m in range(len(pts) - 1)]
            strings[k].initial_length = lab0 + sum(segs)
    return RoutingPlan(strings=strings, pair_hole_gaps=gaps,
                       setup_warnings=warnings)


# ------------------------------------------------------------ side rules

REQUIRED_SIDE = {CreaseKind.MOUNTAIN: Side.BELOW, CreaseKind.VALLEY: Side.ABOVE}


@dataclass
class RoutingViolation:
    string: int
    segment: int
    crease: tuple
    message: str


@dataclass
class RoutingReport:
    ok: bool
    violations: list = field(default_factory=list)


def _segment_crossings(pattern: CreasePattern, p1, p2):
    """Folding creases properly crossed by the flat segment p1-p2."""
    out = []
    for c in pattern.creases:
        if c.kind == CreaseKind.BORDER:
            continue
        a = pattern.vertices[c.v1]
        b = pattern.vertices[c.v2]
        hit = seg_intersection_point(p1, p2, a, b, 1e-12)
        if hit is None:
            continue
        # ignore grazes at the segment endpoints (hole centers on a panel)
        if np.linalg.norm(hit - np.asarray(p1, float)) < 1e-9 or \
           np.linalg.norm(hit - np.asarray(p2, float)) < 1e-9:
            continue
        out.append(c)
    return out


def validate_routing(plan: RoutingPlan, pattern: CreasePattern) -> RoutingReport:
    """Check the side flag of every crease crossing against the fold rule:
    below mountain creases, above valley creases."""
    report = RoutingReport(ok=True)
    for si, route in enumerate(plan.strings):
        for wi in range(1, len(route.waypoints)):
            w_prev = route.waypoints[wi - 1]
            w = route.waypoints[wi]
            crossed = _segment_crossings(pattern, w_prev.hole.position, w.hole.position)
            if not crossed:
                continue
            required = {REQUIRED_SIDE[c.kind] for c in crossed}
            if len(required) > 1:
                report.ok = False
                report.violations.append(RoutingViolation(
                    si, wi, tuple(c.key() for c in crossed),
                    f"string {si} segment {wi} crosses creases of both kinds; "
                    f"one side flag cannot satisfy them"))
                continue
            need = required.pop()
            if w.side is None:
                report.ok = False
                report.violations.append(RoutingViolation(
                    si, wi, crossed[0].key(),
                    f"string {si} segment {wi} crosses a crease but carries "
                    f"no side flag"))
            elif w.side != need:
                report.ok = False
                report.violations.append(RoutingViolation(
                    si, wi, crossed[0].key(),
                    f"string {si} segment {wi} must pass {need.value} "
                    f"crease {crossed[0].key()}"))
    return report


def auto_side_flags(plan: RoutingPlan, pattern: CreasePattern) -> RoutingPlan:
    """Assign the side flag each segment needs; fails on mixed crossings."""
    strings = []
    for si, route in enumerate(plan.strings):
        wps = [RouteWaypoint(w.hole, w.side) for w in route.waypoints]
        for wi in range(1, len(wps)):
            crossed = _segment_crossings(pattern, wps[wi - 1].hole.position,
                                         wps[wi].hole.position)
            if not crossed:
                continue
            required = {REQUIRED_SIDE[c.kind] for c in crossed}
            if len(required) > 1:
                raise RoutingSetupError(
                    f"string {si} segment {wi} crosses creases of both kinds; "
                    f"add an intermediate hole")
            wps[wi].side = required.pop()
        strings.append(StringRoute(wps, route.initial_length))
    return RoutingPlan(strings=strings, pair_hole_gaps=list(plan.pair_hole_gaps),
                       setup_warnings=list(plan.setup_warnings))


# ------------------------------------------------------------- simulation

def default_twist_schedule(stop: float = 20 * math.pi,
                           step: float = math.pi / 36) -> np.ndarray:
    return np.arange(0.0, stop + step / 2, step)


class _FoldCache:
    """Folded geometries in the seed-panel (work surface) frame.

    The rail plane is the plane the clamped mount panel lies in, so the
    simulation uses the seed frame: hole-to-hole distances are frame
    independent, but motor-to-hole offsets are not.
    """

    def __init__(self, pattern):
        self.pattern = pattern
        self.cache = {}

    def get(self, theta: float) -> FoldedGeometry:
        key = round(theta, 13)
        if key not in self.cache:
            self.cache[key] = embed_fold(self.pattern, theta, frame="seed")
        return self.cache[key]


def solve_quasi_static(pattern: CreasePattern, plan: RoutingPlan,
                       config: TsaConfig, twist_schedule=None,
                       fab_limits: FabricationParams | None = None,
                       pin_pose: bool = True) -> list:
    """Walk the twist schedule; return the feasible quasi-static states.

    At each twist the smallest fold angle in [previous fold, fold limit]
    satisfying every string's length constraint is selected (strings only
    ever pull the fold closed).  Without a feasible fold the walk stops and
    the previous state is final.  With ``pin_pose`` False the structure may
    also translate/rotate on the rail plane to satisfy the constraints.
    """
    if twist_schedule is None:
        twist_schedule = default_twist_schedule()
    twist_schedule = np.asarray(twist_schedule, float)
    if len(twist_schedule) == 0:
        raise ValueError("empty twist schedule")
    if twist_schedule[0] != 0.0:
        raise ValueError("twist schedule must start at 0")
    if np.any(np.diff(twist_schedule) <= 0):
        raise ValueError("twist schedule must be strictly increasing")

    theta_max = THETA_CAP
    if fab_limits is not None:
        theta_max = min(theta_max, max_fold_angle(fab_limits))

    cache = _FoldCache(pattern)
    flat = cache.get(0.0)
    if any(r.initial_length is None for r in plan.strings):
        plan = measure_initial_lengths(plan, flat, config)
    if not plan.pair_hole_gaps:
        plan = replace(plan, pair_hole_gaps=[
            float(np.linalg.norm(
                _hole_positions(flat, plan.strings[i], (0, 0, 0))[0]
                - _hole_positions(flat, plan.strings[j], (0, 0, 0))[0]))
            for i, j in plan.pairs])

    center = _center3(config)

    def string_lengths(folded, twist, pose):
        """(tsa_side, segments) per string at a configuration."""
        out = []
        for (i, j), gap in zip(plan.pairs, plan.pair_hole_gaps):
            pi = _hole_positions(folded, plan.strings[i], pose)
            pj = _hole_positions(folded, plan.strings[j], pose)
            offset = float(np.linalg.norm((pi[0] + pj[0]) / 2 - center))
            lab = tsa_segment_length(config, offset, twist, hole_gap=gap)
            for pts in (pi, pj):
                segs = tuple(float(np.linalg.norm(pts[m + 1] - pts[m]))
                             for m in range(len(pts) - 1))
                out.append((lab, segs))
        return out

    def violation(theta, twist, pose):
        folded = cache.get(theta)
        worst = -math.inf
        for k, (lab, segs) in enumerate(string_lengths(folded, twist, pose)):
            worst = max(worst, lab + sum(segs) - plan.strings[k].initial_length)
        return worst

    def best_pose(theta, twist, start_pose):
        if pin_pose:
            return start_pose, violation(theta, twist, start_pose)
        res = minimize(lambda x: violation(theta, twist, tuple(x)),
                       np.asarray(start_pose, float), method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 400})
        return tuple(res.x), float(res.fun)

    states = []
    fold = 0.0
    pose = (0.0, 0.0, 0.0)

    v0 = violation(0.0, float(twist_schedule[0]), pose)
    if v0 > SLACK_TOL:
        raise RoutingSetupError(
            f"initial strings are too short by {v0:.6f} mm; "
            f"the flat state violates the length constraints")

    for idx, twist in enumerate(twist_schedule):
        twist = float(twist)
        pose_try, v_here = best_pose(fold, twist, pose)
        if v_here <= SLACK_TOL:
            fold_new, pose_new = fold, pose_try
        else:
            pose_max, v_max = best_pose(theta_max, twist, pose)
            if v_max > SLACK_TOL:
                break   # the previous state is final
            if pin_pose:
                fold_new = brentq(lambda th: violation(th, twist, pose),
                                  fold, theta_max, xtol=1e-12)
                pose_new = pose
            else:
                lo, hi = fold, theta_max
                pose_new = pose_max
                for _ in range(60):
                    mid = (lo + hi) / 2
                    p_mid, v_mid = best_pose(mid, twist, pose_new)
                    if v_mid <= 0:
                        hi, pose_new = mid, p_mid
                    else:
                        lo = mid
                fold_new = hi
        folded = cache.get(fold_new)
        data = string_lengths(folded, twist, pose_new)
        slacks = tuple(plan.strings[k].initial_length - (lab + sum(segs))
                       for k, (lab, segs) in enumerate(data))
        states.append(QuasiStaticState(
            index=idx, twist_angle=twist, fold_theta=fold_new,
            rigid_pose=tuple(pose_new),
            tsa_side_lengths=tuple(lab for lab, _ in data),
            segment_lengths=tuple(segs for _, segs in data),
            slacks=slacks))
        fold, pose = fold_new, pose_new
    return states


def hole_angle(state: QuasiStaticState, plan: RoutingPlan, pattern: CreasePattern,
               string_index: int, waypoint_index: int,
               folded: FoldedGeometry | None = None) -> float:
    """Angle at a hole between the incoming and outgoing string segments."""
    if folded is None:
        folded = embed_fold(pattern, state.fold_theta, frame="seed")
    pts = _hole_positions(folded, plan.strings[string_index], state.rigid_pose)
    b = pts[waypoint_index - 1] - pts[waypoint_index]
    d = pts[waypoint_index + 1] - pts[waypoint_index]
    cosv = float(np.dot(b, d) / (np.linalg.norm(b) * np.linalg.norm(d)))
    return math.acos(max(-1.0, min(1.0, cosv)))


def reference_scenario():
    """Ring-rail reference setup: a 120 mm, six-unit uniform Miura strip in
    four mirrored rows, four strings in two twisted pairs, holes at panel
    centers, one TSA east of the sheet.

    Each string weaves a row pair: up through a panel column, east across a
    chevron, north over the seam, back west and down, so every segment
    crosses exactly one crease kind and the side flags alternate.

    Returns (pattern, plan, config, fab_params).
    """
    from .fabrication import FabricationParams
    from .geometry import polygon_centroid
    from .kinematics import lower_panel_id, upper_panel_id
    from .pattern import synthesize_strip, tessellate
    from .transition import EntryFlag, TransitionGraphDesign

    design = TransitionGraphDesign((20.0,) * 6, (math.pi / 3,) * 5,
                                   EntryFlag.VALLEY)
    pattern = tessellate(synthesize_strip(design, 30.0), 4)

    def waypoint(pid):
        c = polygon_centroid(pattern.panel_polygon(pid))
        return RouteWaypoint(AnchoredPoint(pid, (float(c[0]), float(c[1]))))

    def weave(col, row_a, row_b):
        seq = [
            lower_panel_id(pattern, row_a, col),
            lower_panel_id(pattern, row_a, col + 1),
            upper_panel_id(pattern, row_a, col + 1),
            upper_panel_id(pattern, row_b, col + 1),
            lower_panel_id(pattern, row_b, col + 1),
            lower_panel_id(pattern, row_b, col),
        ]
        return StringRoute([waypoint(p) for p in seq])

    # two east-going weaves per outer row pair, entering at the west edge
    # where the motor sits; the two pairs mirror across the sheet center
    # line, so mirrored strings have equal initial lengths
    plan = RoutingPlan(strings=[
        weave(0, 0, 1), weave(2, 0, 1),
        weave(0, 3, 2), weave(2, 3, 2),
    ])
    plan = auto_side_flags(plan, pattern)
    config = TsaConfig(rotation_center=(-70.0, 60.0), rotation_diameter=12.0,
                       first_hole_gap=40.0, string_width=2.0, strings_per_unit=4)
    fab = FabricationParams(inner_bias=3.0, panel_height=2.2,
                            membrane_thickness=0.4)
    return pattern, plan, config, fab
