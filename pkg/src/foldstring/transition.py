"""Planar transition-graph model of a Miura origami string.

A design is a chain of transition vectors: segment i has length ``l_i``,
an entry flag marking the type of the main crease that runs parallel to it,
and a shape angle ``beta_i`` for the zigzag crease joining it to segment
i-1.  Given a main-crease fold angle theta, the realized absolute angle of
every segment follows from three relations:

  initial_alpha(theta)                 tilt of segment 0 from the half-unit
  transition_delta(beta, theta, flag)  signed turn at each zigzag crease
  alpha_i = alpha_{i-1} + delta_i      accumulated heading

The chain endpoint is the transition endpoint tracked by the arm designer.
All angles are radians; all lengths millimetres.  Flags alternate along the
chain, so only the first one is stored.

Flag convention: both the turn formula and its inverse take the entry flag
of the *preceding* segment (the one the zigzag crease attaches from).  With
that single convention the two are exact inverses of each other.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import polyline_self_intersects as _polyline_self_intersects

TWO_PI = 2 * math.pi

# keep-out band around pi/2 used by angle guards
BETA_MIN = 0.02 * math.pi
BETA_MAX = 0.98 * math.pi
BETA_GUARD = 0.02 * math.pi


class EntryFlag(enum.IntEnum):
    """Main-crease type marker: 0 = mountain, 1 = valley."""

    MOUNTAIN = 0
    VALLEY = 1

    def flip(self) -> "EntryFlag":
        return EntryFlag(1 - self.value)

    @property
    def sign(self) -> int:
        """(-1)**value, the sign factor used by the turn formula."""
        return -1 if self.value else 1


@dataclass(frozen=True)
class TransitionVector:
    """One realized chain segment at a given fold angle."""

    length: float
    absolute_angle: float
    entry_flag: EntryFlag

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"segment length must be positive, got {self.length}")

    @property
    def displacement(self) -> np.ndarray:
        return self.length * np.array([math.cos(self.absolute_angle),
                                       math.sin(self.absolute_angle)])


@dataclass(frozen=True)
class TransitionGraphDesign:
    """Design genome: start point, segment lengths, shape angles, first flag."""

    lengths: tuple
    shape_angles: tuple
    first_flag: EntryFlag = EntryFlag.VALLEY
    start: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "shape_angles", tuple(float(v) for v in self.shape_angles))
        object.__setattr__(self, "first_flag", EntryFlag(self.first_flag))
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        if len(self.lengths) != len(self.shape_angles) + 1:
            raise ValueError(
                f"need one more length than shape angle, got {len(self.lengths)} lengths "
                f"and {len(self.shape_angles)} angles")
        if len(self.shape_angles) < 1:
            raise ValueError("a design needs at least two segments (one shape angle)")
        for l in self.lengths:
            if l <= 0:
                raise ValueError(f"segment lengths must be positive, got {l}")
        for b in self.shape_angles:
            if not (0 < b < math.pi) or abs(b - math.pi / 2) < 1e-12:
                raise ValueError(f"shape angle {b} outside (0, pi) \\ {{pi/2}}")

    @property
    def unit_count(self) -> int:
        """Number of zigzag creases, the paper's n."""
        return len(self.shape_angles)

    def flags(self) -> list:
        """Alternating entry flags for every segment."""
        out = [self.first_flag]
        for _ in self.shape_angles:
            out.append(out[-1].flip())
        return out


@dataclass(frozen=True)
class FoldParameter:
    """Main-crease fold angle theta in [0, pi] and its ratio p = theta/pi."""

    theta: float

    def __post_init__(self):
        if not (0 <= self.theta <= math.pi):
            raise ValueError(f"fold angle {self.theta} outside [0, pi]")

    @property
    def ratio(self) -> float:
        return self.theta / math.pi

    @classmethod
    def from_ratio(cls, p: float) -> "FoldParameter":
        return cls(p * math.pi)


@dataclass(frozen=True)
class PlanarState:
    """Realized chain at one fold angle."""

    theta: float
    vectors: tuple            # of TransitionVector
    start: tuple
    endpoint: tuple = field(init=False)

    def __post_init__(self):
        p = np.array(self.start, float)
        for v in self.vectors:
            p = p + v.displacement
        object.__setattr__(self, "endpoint", (float(p[0]), float(p[1])))

    def points(self) -> np.ndarray:
        """Chain vertices including start, shape (n+2, 2)."""
        pts = [np.array(self.start, float)]
        for v in self.vectors:
            pts.append(pts[-1] + v.displacement)
        return np.array(pts)


def initial_alpha(theta: float) -> float:
    """Tilt of the first segment induced by the leading half-unit.

    Monotone from 0 at theta=0 to pi/2 at theta=pi.
    """
    if not (0 <= theta <= math.pi):
        raise ValueError(f"fold angle {theta} outside [0, pi]")
    if theta == math.pi:
        return math.pi / 2
    c = math.cos(theta / 2)
    if c <= 0.0:
        return math.pi / 2
    arg = 2 * c / (1 + c)
    return math.acos(min(1.0, math.sqrt(arg)))


def transition_delta(beta: float, theta: float, prev_flag: EntryFlag) -> float:
    """Signed heading change at a zigzag crease of shape angle ``beta``.

    ``prev_flag`` is the entry flag of the preceding segment; flipping it
    flips the sign.  Zero at theta=0, magnitude grows with theta.
    """
    if not (0 < beta < math.pi):
        raise ValueError(f"shape angle {beta} outside (0, pi)")
    if abs(beta - math.pi / 2) < 1e-12:
        raise ValueError("shape angle pi/2 is degenerate (undefined tangent)")
    if not (0 <= theta <= math.pi):
        raise ValueError(f"fold angle {theta} outside [0, pi]")
    return 2 * math.atan(math.sin(theta / 2) * math.tan(beta) * EntryFlag(prev_flag).sign)


def shape_angle(delta_alpha: float, p: float, prev_flag: EntryFlag) -> float:
    """Shape angle producing heading change ``delta_alpha`` at fold ratio ``p``.

    Exact inverse of transition_delta evaluated at theta = p*pi with the same
    ``prev_flag``.  The branch (below or above pi/2) encodes the turn
    direction together with the flag.
    """
    if p <= 0 or p > 1:
        raise ValueError(f"fold ratio {p} outside (0, 1]")
    if abs(delta_alpha) >= math.pi:
        raise ValueError(f"|delta_alpha| must be < pi, got {delta_alpha}")
    beta = math.atan2(math.tan(abs(delta_alpha) / 2), math.sin(p * math.pi / 2))
    first_branch = (delta_alpha >= 0) == (EntryFlag(prev_flag) == EntryFlag.MOUNTAIN)
    return beta if first_branch else math.pi - beta


def fold_state(design: TransitionGraphDesign, theta: float) -> PlanarState:
    """Realize the design at fold angle theta."""
    flags = design.flags()
    alpha = initial_alpha(theta)
    vectors = [TransitionVector(design.lengths[0], alpha, flags[0])]
    for i, beta in enumerate(design.shape_angles):
        alpha = alpha + transition_delta(beta, theta, flags[i])
        vectors.append(TransitionVector(design.lengths[i + 1], alpha, flags[i + 1]))
    return PlanarState(theta=theta, vectors=tuple(vectors), start=design.start)


def fold_state_batch(design: TransitionGraphDesign, thetas) -> np.ndarray:
    """Endpoints for many fold angles at once, shape (k, 2).

    Vectorized equivalent of [fold_state(d, t).endpoint for t in thetas].
    """
    th = np.asarray(thetas, float)
    c = np.cos(th / 2)
    arg = np.clip(2 * c / np.maximum(1 + c, 1e-300), 0.0, 1.0)
    a0 = np.arccos(np.sqrt(arg))
    a0 = np.where((c <= 0.0) | (th == math.pi), math.pi / 2, a0)
    flags = design.flags()
    signs = np.array([f.sign for f in flags[:-1]])
    tans = np.tan(np.asarray(design.shape_angles))
    # deltas[k, i]
    deltas = 2 * np.arctan(np.sin(th / 2)[:, None] * tans[None, :] * signs[None, :])
    alphas = a0[:, None] + np.concatenate(
        [np.zeros((len(th), 1)), np.cumsum(deltas, axis=1)], axis=1)
    ls = np.asarray(design.lengths)
    x = np.sum(ls * np.cos(alphas), axis=1) + design.start[0]
    y = np.sum(ls * np.sin(alphas), axis=1) + design.start[1]
    return np.stack([x, y], axis=1)


def fold_state_points_batch(design: TransitionGraphDesign, thetas) -> np.ndarray:
    """All chain vertices for many fold angles, shape (k, n+2, 2)."""
    th = np.asarray(thetas, float)
    c = np.cos(th / 2)
    arg = np.clip(2 * c / np.maximum(1 + c, 1e-300), 0.0, 1.0)
    a0 = np.arccos(np.sqrt(arg))
    a0 = np.where((c <= 0.0) | (th == math.pi), math.pi / 2, a0)
    flags = design.flags()
    signs = np.array([f.sign for f in flags[:-1]])
    tans = np.tan(np.asarray(design.shape_angles))
    deltas = 2 * np.arctan(np.sin(th / 2)[:, None] * tans[None, :] * signs[None, :])
    alphas = a0[:, None] + np.concatenate(
        [np.zeros((len(th), 1)), np.cumsum(deltas, axis=1)], axis=1)
    ls = np.asarray(design.lengths)
    dx = ls * np.cos(alphas)
    dy = ls * np.sin(alphas)
    pts = np.zeros((len(th), len(ls) + 1, 2))
    pts[:, 0, 0] = design.start[0]
    pts[:, 0, 1] = design.start[1]
    pts[:, 1:, 0] = design.start[0] + np.cumsum(dx, axis=1)
    pts[:, 1:, 1] = design.start[1] + np.cumsum(dy, axis=1)
    return pts


DEFAULT_STEP = math.radians(4.0)


def sample_trajectory(design: TransitionGraphDesign, step: float = DEFAULT_STEP) -> list:
    """Realized states on a uniform theta grid from 0 to pi inclusive.

    The step must divide pi into a whole number of intervals; the default
    4-degree step yields 46 states.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    n = round(math.pi / step)
    if n < 1 or abs(n * step - math.pi) > 1e-9:
        raise ValueError(f"step {step} does not divide [0, pi] evenly")
    return [fold_state(design, math.pi * k / n) for k in range(n + 1)]


def trajectory_thetas(step: float = DEFAULT_STEP) -> np.ndarray:
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    n = round(math.pi / step)
    if n < 1 or abs(n * step - math.pi) > 1e-9:
        raise ValueError(f"step {step} does not divide [0, pi] evenly")
    return math.pi * np.arange(n + 1) / n


def polyline_self_intersects(state: PlanarState, eps: float = 1e-9) -> bool:
    """True when the realized chain touches itself anywhere."""
    return _polyline_self_intersects(state.points(), eps)
