"""Computational design of origami robotic arms.

A design task fixes the chain start, an ordered list of target waypoints
the endpoint must visit across the fold, and optional warning/prohibited
regions.  Candidate designs are scored on the 46-state trajectory: reward
terms pull the unfolded endpoint to the first waypoint and the fully
folded endpoint to the last, improper states (self-intersection or an
endpoint inside a flagged region) each cost a fixed penalty, and designs
whose endpoint ever enters a prohibited region are kept out of the final
ranking.  The continuous genome is searched with CMA-ES; the binary first
flag is enumerated across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cma import EvolutionRun, cma_es_minimize
from .geometry import Rect, polyline_self_intersects
from .transition import (
    BETA_GUARD,
    BETA_MAX,
    BETA_MIN,
    EntryFlag,
    TransitionGraphDesign,
    fold_state_points_batch,
    trajectory_thetas,
)

IMPROPER_PENALTY = 4.0
REWARD_TOTAL = 600.0
DEFAULT_REWARD_WEIGHT = 120.0
DEFAULT_UNIT_COUNT = 5
WORST_FITNESS = -1e9
LENGTH_MIN = 1.0


@dataclass(frozen=True)
class DesignTask:
    start_anchor: tuple = (0.0, 0.0)
    waypoints: tuple = ()
    warning_regions: tuple = ()
    prohibited_regions: tuple = ()
    reward_weight: float = DEFAULT_REWARD_WEIGHT
    unit_count: int = DEFAULT_UNIT_COUNT

    def __post_init__(self):
        object.__setattr__(self, "waypoints",
                           tuple((float(x), float(y)) for x, y in self.waypoints))
        object.__setattr__(self, "warning_regions", tuple(self.warning_regions))
        object.__setattr__(self, "prohibited_regions", tuple(self.prohibited_regions))
        if len(self.waypoints) < 2:
            raise ValueError("a task needs at least two waypoints")
        if not (0 < self.reward_weight < REWARD_TOTAL):
            raise ValueError(f"reward weight must lie in (0, {REWARD_TOTAL})")
        if self.unit_count < 1:
            raise ValueError("unit count must be >= 1")


@dataclass(frozen=True)
class FitnessBreakdown:
    start_distance: float
    end_distance: float
    improper_count: int
    prohibited_hit: bool
    fitness: float
    waypoint_distances: tuple = ()

    @staticmethod
    def compute(start_distance, end_distance, improper_count, prohibited_hit,
                reward_weight, waypoint_distances=()):
        f = reward_weight / (10.0 + start_distance) \
            + (REWARD_TOTAL - reward_weight) / (10.0 + end_distance) \
            - IMPROPER_PENALTY * improper_count
        # extra waypoints beyond the first/last add analogous reward terms
        for dist in waypoint_distances:
            f += (REWARD_TOTAL / 2) / (10.0 + dist)
        return FitnessBreakdown(
            start_distance=float(start_distance), end_distance=float(end_distance),
            improper_count=int(improper_count), prohibited_hit=bool(prohibited_hit),
            fitness=float(f), waypoint_distances=tuple(waypoint_distances))


def count_improper_states(trajectory, task: DesignTask):
    """(N, prohibited_hit) over realized states: a state is improper when its
    chain self-intersects or its endpoint lies in a warning or prohibited
    region."""
    if len(trajectory) == 0:
        raise ValueError("trajectory must not be empty")
    n = 0
    prohibited_hit = False
    for state in trajectory:
        e = state.endpoint
        in_warn = any(r.contains(e) for r in task.warning_regions)
        in_prob = any(r.contains(e) for r in task.prohibited_regions)
        bad = in_warn or in_prob or polyline_self_intersects(state.points())
        if in_prob:
            prohibited_hit = True
        if bad:
            n += 1
    return n, prohibited_hit


def _chains_self_intersect(points: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Vectorized chain self-intersection over a batch of polylines.

    Mirrors geometry.polyline_self_intersects; points has shape (k, m+1, 2),
    the result shape (k,).
    """
    k, mp1, _ = points.shape
    m = mp1 - 1
    hit = np.zeros(k, bool)
    if m >= 2:
        u = points[:, 1:-1] - points[:, :-2]
        v = points[:, 2:] - points[:, 1:-1]
        cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
        dot = np.sum(u * v, axis=-1)
        norm = np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1)
        double_back = (np.abs(cross) <= eps * np.maximum(norm, 1e-300)) & (dot < 0)
        hit |= double_back.any(axis=1)
    ii, jj = [], []
    for i in range(m):
        for j in range(i + 2, m):
            ii.append(i)
            jj.append(j)
    if ii:
        ii = np.array(ii)
        jj = np.array(jj)
        p1 = points[:, ii]
        p2 = points[:, ii + 1]
        q1 = points[:, jj]
        q2 = points[:, jj + 1]

        def crs(a, b):
            return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]

        d1 = crs(q2 - q1, p1 - q1)
        d2 = crs(q2 - q1, p2 - q1)
        d3 = crs(p2 - p1, q1 - p1)
        d4 = crs(p2 - p1, q2 - p1)
        proper = (((d1 > eps) & (d2 < -eps)) | ((d1 < -eps) & (d2 > eps))) & \
                 (((d3 > eps) & (d4 < -eps)) | ((d3 < -eps) & (d4 > eps)))

        def on_seg(a, b, p):
            return ((np.minimum(a[..., 0], b[..., 0]) - eps <= p[..., 0]) &
                    (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]) + eps) &
                    (np.minimum(a[..., 1], b[..., 1]) - eps <= p[..., 1]) &
                    (p[..., 1] <= np.maximum(a[..., 1], b[..., 1]) + eps))

        touch = ((np.abs(d1) <= eps) & on_seg(q1, q2, p1)) | \
                ((np.abs(d2) <= eps) & on_seg(q1, q2, p2)) | \
                ((np.abs(d3) <= eps) & on_seg(p1, p2, q1)) | \
                ((np.abs(d4) <= eps) & on_seg(p1, p2, q2))
        hit |= (proper | touch).any(axis=1)
    return hit


def _improper_from_points(points: np.ndarray, task: DesignTask):
    """Vectorized improper-state count; points has shape (k, n+2, 2)."""
    ends = points[:, -1, :]
    in_warn = np.zeros(len(points), bool)
    in_prob = np.zeros(len(points), bool)
    for r in task.warning_regions:
        in_warn |= ((ends[:, 0] >= r.xmin) & (ends[:, 0] <= r.xmax) &
                    (ends[:, 1] >= r.ymin) & (ends[:, 1] <= r.ymax))
    for r in task.prohibited_regions:
        in_prob |= ((ends[:, 0] >= r.xmin) & (ends[:, 0] <= r.xmax) &
                    (ends[:, 1] >= r.ymin) & (ends[:, 1] <= r.ymax))
    bad = in_warn | in_prob | _chains_self_intersect(points)
    return int(bad.sum()), bool(in_prob.any())


def evaluate_fitness(design: TransitionGraphDesign, task: DesignTask) -> FitnessBreakdown:
    """Score a design on its 46-state trajectory."""
    thetas = trajectory_thetas()
    pts = fold_state_points_batch(design, thetas)
    start_d = float(np.linalg.norm(pts[0, -1] - np.asarray(task.waypoints[0])))
    end_d = float(np.linalg.norm(pts[-1, -1] - np.asarray(task.waypoints[-1])))
    n, prohibited = _improper_from_points(pts, task)
    extra = []
    mids = task.waypoints[1:-1]
    if mids:
        # evenly spaced fold samples for intermediate waypoints
        idx = np.linspace(0, len(thetas) - 1, len(mids) + 2)[1:-1].round().astype(int)
        for w, i in zip(mids, idx):
            extra.append(float(np.linalg.norm(pts[i, -1] - np.asarray(w))))
    return FitnessBreakdown.compute(start_d, end_d, n, prohibited,
                                    task.reward_weight, tuple(extra))


def decode_genome(genome: np.ndarray, unit_count: int,
                  first_flag: EntryFlag, start=(0.0, 0.0)) -> TransitionGraphDesign:
    """Real vector -> design.  Total: every real vector decodes to a valid
    design (positive lengths, shape angles clear of pi/2)."""
    g = np.asarray(genome, float)
    n = unit_count
    if len(g) != 2 * n + 1:
        raise ValueError(f"genome needs {2 * n + 1} values for {n} units")
    lengths = LENGTH_MIN + np.exp(np.clip(g[:n + 1], -60, 60))
    usable = (BETA_MAX - BETA_MIN) - 2 * BETA_GUARD
    mapped = BETA_MIN + usable / (1 + np.exp(-np.clip(g[n + 1:], -60, 60)))
    betas = np.where(mapped < math.pi / 2 - BETA_GUARD, mapped, mapped + 2 * BETA_GUARD)
    return TransitionGraphDesign(tuple(lengths), tuple(betas), first_flag, start)


def genome_dimension(unit_count: int) -> int:
    return 2 * unit_count + 1


def _objective(task: DesignTask, flag: EntryFlag):
    def f(genome):
        try:
            design = decode_genome(genome, task.unit_count, flag, task.start_anchor)
            return -evaluate_fitness(design, task).fitness
        except (ValueError, FloatingPointError):
            return -WORST_FITNESS
    return f


@dataclass
class RankedDesign:
    design: TransitionGraphDesign
    breakdown: FitnessBreakdown
    run: EvolutionRun


DEFAULT_BUDGET = 300
DEFAULT_MAX_EVALS = 30_000


def design_arm(task: DesignTask, runs: int = 10, seed: int = 0,
               budget: int = DEFAULT_BUDGET,
               max_evaluations: int = DEFAULT_MAX_EVALS) -> list:
    """Run independent evolution searches and rank the outcomes.

    Runs split evenly across the two first-flag values, each with its own
    randomized initial mean and step size.  Designs whose endpoint enters a
    prohibited region are excluded from the ranking.  Returns RankedDesign
    entries sorted by fitness, best first.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    dim = genome_dimension(task.unit_count)
    results = []
    master = np.random.default_rng(seed)
    for k in range(runs):
        flag = EntryFlag.MOUNTAIN if k % 2 == 0 else EntryFlag.VALLEY
        run_seed = int(master.integers(0, 2 ** 31 - 1))
        init_rng = np.random.default_rng(run_seed)
        # lengths genes around log(span/units); angle genes near 0
        span = float(np.linalg.norm(np.asarray(task.waypoints[0]) -
                                    np.asarray(task.start_anchor))) or 100.0
        mean = np.concatenate([
            np.full(task.unit_count + 1, math.log(max(span / (task.unit_count + 1), 2.0)))
            + init_rng.normal(0, 0.3, task.unit_count + 1),
            init_rng.normal(0, 0.8, task.unit_count),
        ])
        sigma = float(init_rng.uniform(0.3, 0.8))
        run = cma_es_minimize(_objective(task, flag), dim, mean, sigma,
                              budget=budget, seed=run_seed,
                              max_evaluations=max_evaluations)
        design = decode_genome(run.best_x, task.unit_count, flag, task.start_anchor)
        breakdown = evaluate_fitness(design, task)
        run.best_design = design
        run.best_breakdown = breakdown
        results.append(RankedDesign(design=design, breakdown=breakdown, run=run))
    feasible = [r for r in results if not r.breakdown.prohibited_hit]
    feasible.sort(key=lambda r: -r.breakdown.fitness)
    if not feasible:
        raise InfeasibleTaskError(
            f"all {runs} runs ended inside a prohibited region; "
            f"best infeasible fitness "
            f"{max(r.breakdown.fitness for r in results):.3f}")
    return feasible


class InfeasibleTaskError(RuntimeError):
    """Every evolution run violated a prohibited region."""


def fig3_task(reward_weight: float = DEFAULT_REWARD_WEIGHT,
              unit_count: int = DEFAULT_UNIT_COUNT) -> DesignTask:
    """The reference arm-design task: start fixed at the origin, targets at
    (250, 0) unfolded and (50, 133.3) folded, with warning region
    x>=140, y>=30 and prohibited region x>=150, y>=40."""
    return DesignTask(
        start_anchor=(0.0, 0.0),
        waypoints=((250.0, 0.0), (50.0, 133.3)),
        warning_regions=(Rect(xmin=140.0, ymin=30.0),),
        prohibited_regions=(Rect(xmin=150.0, ymin=40.0),),
        reward_weight=reward_weight,
        unit_count=unit_count,
    )
