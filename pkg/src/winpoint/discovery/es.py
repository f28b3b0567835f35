"""Restarted (mu, lambda) evolution strategy over the finite interpolation points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import InvalidInputError
from ..rng import STREAM_ES, stream
from .fitness import fitness_batch


@dataclass(frozen=True)
class ESConfig:
    population: int = 50
    generations: int = 100
    restarts: int = 3
    sigma_init: float = 0.5
    sigma_bounds: tuple = (0.01, 2.0)
    elite_fraction: float = 0.25
    sigma_up: float = 1.1
    sigma_down: float = 0.9
    success_threshold: float = 0.2
    lambda1: float = 1e-3
    # the formula weight 1e-4 lets the tensor term dominate and collapses points
    # toward 0; 0.1 makes conditioning the driving term (see notes)
    lambda2: float = 0.1
    init_variance: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population < 1 or self.generations < 1 or self.restarts < 1:
            raise InvalidInputError("population, generations and restarts must be >= 1")
        if not 0 < self.elite_fraction <= 1:
            raise InvalidInputError("elite_fraction must lie in (0, 1]")
        lo, hi = self.sigma_bounds
        if not 0 < lo <= hi:
            raise InvalidInputError("sigma bounds must satisfy 0 < lo <= hi")
        if self.seed < 0:
            raise InvalidInputError("seed must be non-negative")

    @property
    def n_elite(self) -> int:
        return max(1, int(self.population * self.elite_fraction))


@dataclass
class ESRun:
    best: np.ndarray
    best_fitness: float
    restart_best: list = field(default_factory=list)


# hooks used by the dtype-aware variant
Mutator = Callable[[np.ndarray, list], np.ndarray]
Penalty = Callable[[np.ndarray], np.ndarray]


def es_run(tile, cfg: ESConfig, mutate: Mutator | None = None, penalty: Penalty | None = None,
           stream_tag: int = STREAM_ES) -> ESRun:
    m, r = tile
    k = m + r - 2
    best_x, best_f = None, math.inf
    per_restart = []
    for restart in range(cfg.restarts):
        mu = math.sqrt(cfg.init_variance) * stream(stream_tag, cfg.seed, restart, 0, 0).standard_normal(k)
        sigma = cfg.sigma_init
        prev_gen_best = math.inf
        r_best_x, r_best_f = mu.copy(), math.inf
        for gen in range(1, cfg.generations + 1):
            rngs = [stream(stream_tag, cfg.seed, restart, gen, i) for i in range(cfg.population)]
            X = mu[None, :] + sigma * np.stack([g.standard_normal(k) for g in rngs])
            if mutate is not None:
                X = mutate(X, rngs)
            f = fitness_batch(X, m, r, cfg.lambda1, cfg.lambda2)[0]
            if penalty is not None:
                f = f + penalty(X)
            order = np.argsort(f, kind="stable")  # equal fitness -> lower index first
            success = float(np.mean(f < prev_gen_best))
            prev_gen_best = float(f[order[0]])
            if f[order[0]] < r_best_f:
                r_best_f, r_best_x = float(f[order[0]]), X[order[0]].copy()
            mu = X[order[:cfg.n_elite]].mean(axis=0)
            factor = cfg.sigma_up if success > cfg.success_threshold else cfg.sigma_down
            sigma = min(max(sigma * factor, cfg.sigma_bounds[0]), cfg.sigma_bounds[1])
        per_restart.append((r_best_f, r_best_x))
        if r_best_f < best_f:
            best_f, best_x = r_best_f, r_best_x
    return ESRun(best_x, best_f, per_restart)


def es_search(tile, cfg: ESConfig) -> np.ndarray:
    """Best continuous point vector over all restarts."""
    return es_run(tile, cfg).best
