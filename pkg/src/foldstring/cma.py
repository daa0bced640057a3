"""Covariance matrix adaptation evolution strategy.

A compact (mu/mu_w, lambda) CMA-ES minimizer with weighted recombination,
cumulative step-size adaptation and rank-one plus rank-mu covariance
updates, using the standard default parameters.  Deterministic for a fixed
seed.  Non-finite objective values are replaced by a large penalty so a
misbehaving objective degrades gracefully instead of corrupting the
distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WORST = 1e30


def default_lambda(dimension: int) -> int:
    """Default population size: 4 + floor(3 ln d)."""
    return 4 + int(math.floor(3 * math.log(dimension)))


@dataclass
class GenerationRecord:
    index: int
    best_so_far: float
    gen_best: float
    gen_mean: float
    sigma: float
    mean: tuple


@dataclass
class EvolutionRun:
    seed: int
    generations: list = field(default_factory=list)
    best_x: np.ndarray | None = None
    best_f: float = math.inf
    evaluations: int = 0
    non_finite: int = 0
    # filled in by the arm designer
    best_design: object = None
    best_breakdown: object = None

    @property
    def best_curve(self):
        return [g.best_so_far for g in self.generations]


def cma_es_minimize(objective, dimension: int, init_mean, init_sigma: float,
                    budget: int = 300, seed: int = 0,
                    max_evaluations: int | None = None,
                    popsize: int | None = None,
                    target_f: float | None = None) -> EvolutionRun:
    """Minimize ``objective`` over R^dimension.

    ``budget`` counts generations; ``max_evaluations`` optionally caps
    objective calls as well, whichever limit hits first.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if init_sigma <= 0:
        raise ValueError("init_sigma must be positive")
    if budget < 1:
        raise ValueError("budget must be >= 1 generation")

    d = dimension
    lam = popsize if popsize else default_lambda(d)
    mu = lam // 2
    raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / np.sum(weights ** 2)

    c_sigma = (mu_eff + 2) / (d + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (d + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / d) / (d + 4 + 2 * mu_eff / d)
    c_1 = 2 / ((d + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((d + 2) ** 2 + mu_eff))
    chi_n = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d))

    rng = np.random.default_rng(seed)
    mean = np.array(init_mean, float).reshape(d)
    sigma = float(init_sigma)
    C = np.eye(d)
    p_sigma = np.zeros(d)
    p_c = np.zeros(d)
    B = np.eye(d)
    D = np.ones(d)

    run = EvolutionRun(seed=seed)
    evals = 0
    for gen in range(budget):
        if max_evaluations is not None and evals + lam > max_evaluations:
            break
        z = rng.standard_normal((lam, d))
        y = z @ (B * D).T              # y_k = B @ (D * z_k)
        xs = mean + sigma * y
        fs = np.empty(lam)
        for k in range(lam):
            v = float(objective(xs[k]))
            if not math.isfinite(v):
                run.non_finite += 1
                v = WORST
            fs[k] = v
        evals += lam

        order = np.argsort(fs, kind="stable")
        fs_sorted = fs[order]
        if fs_sorted[0] < run.best_f:
            run.best_f = float(fs_sorted[0])
            run.best_x = xs[order[0]].copy()

        y_sel = y[order[:mu]]
        y_w = weights @ y_sel
        mean = mean + sigma * y_w

        # step-size path and update
        C_inv_sqrt = B @ np.diag(1.0 / D) @ B.T
        p_sigma = (1 - c_sigma) * p_sigma + \
            math.sqrt(c_sigma * (2 - c_sigma) * mu_eff) * (C_inv_sqrt @ y_w)
        expected = np.linalg.norm(p_sigma) / chi_n
        sigma = sigma * math.exp((c_sigma / d_sigma) * (expected - 1))

        h_sig = 1.0 if (np.linalg.norm(p_sigma) /
                        math.sqrt(1 - (1 - c_sigma) ** (2 * (gen + 1))) / chi_n
                        < 1.4 + 2 / (d + 1)) else 0.0
        p_c = (1 - c_c) * p_c + h_sig * math.sqrt(c_c * (2 - c_c) * mu_eff) * y_w
        rank1 = np.outer(p_c, p_c) + (1 - h_sig) * c_c * (2 - c_c) * C
        rank_mu = (y_sel * weights[:, None]).T @ y_sel
        C = (1 - c_1 - c_mu) * C + c_1 * rank1 + c_mu * rank_mu
        C = (C + C.T) / 2

        eigvals, B = np.linalg.eigh(C)
        eigvals = np.maximum(eigvals, 1e-30)
        D = np.sqrt(eigvals)

        run.generations.append(GenerationRecord(
            index=gen,
            best_so_far=run.best_f,
            gen_best=float(fs_sorted[0]),
            gen_mean=float(np.mean(fs_sorted)),
            sigma=sigma,
            mean=tuple(mean.tolist()),
        ))
        if target_f is not None and run.best_f <= target_f:
            break
        if sigma < 1e-16:
            break
    run.evaluations = evals
    return run
