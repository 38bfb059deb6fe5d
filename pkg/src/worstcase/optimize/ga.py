from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from ..scenario import SearchSpace
from .base import (
    BatchMap,
    Budget,
    OptimizationResult,
    Run,
    blend_crossover,
    gaussian_mutation,
    tournament_select,
)


@dataclass(frozen=True)
class GAParams:
    pop: int = 20
    tournament_k: int = 2
    crossover_rate: float = 0.9
    sigma_rel: float = 0.1
    mutation_rate: Optional[float] = None  # per gene; default 1/dims

    def __post_init__(self) -> None:
        if self.pop < 2:
            raise ValueError("population must be >= 2")
        if not 1 <= self.tournament_k <= self.pop:
            raise ValueError("tournament size must be in [1, pop]")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover rate must be in [0, 1]")
        if self.sigma_rel < 0:
            raise ValueError("sigma_rel must be >= 0")


def make_offspring(
    pop: np.ndarray,
    fitness: np.ndarray,
    space: SearchSpace,
    params: GAParams,
    rng: np.random.Generator,
    count: int,
) -> np.ndarray:
    """Tournament selection, blend crossover and Gaussian mutation."""
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / space.dims
    children = []
    while len(children) < count:
        p1 = pop[tournament_select(fitness, params.tournament_k, rng)]
        p2 = pop[tournament_select(fitness, params.tournament_k, rng)]
        if rng.random() < params.crossover_rate:
            c1, c2 = blend_crossover(p1, p2, rng)
        else:
            c1, c2 = p1.copy(), p2.copy()
        children.append(gaussian_mutation(c1, space, params.sigma_rel, rate, rng))
        children.append(gaussian_mutation(c2, space, params.sigma_rel, rate, rng))
    return np.clip(np.array(children[:count]), space.lower, space.upper)


def genetic_algorithm(
    f: Callable[[np.ndarray], Any],
    space: SearchSpace,
    budget: Budget = Budget(),
    seed: int = 0,
    params: Optional[GAParams | dict] = None,
    *,
    batch_map: Optional[BatchMap] = None,
) -> OptimizationResult:
    """Real-coded (mu + lambda) GA minimizing ``f`` over ``space``."""
    if not isinstance(params, GAParams):
        params = GAParams(**(params or {}))
    rng = np.random.default_rng(seed)
    run = Run(f, space, budget, batch_map)

    pop = space.sample(rng, params.pop)
    fitness = run.evaluate(pop)
    pop = pop[: len(fitness)]
    while not run.done:
        children = make_offspring(pop, fitness, space, params, rng, params.pop)
        child_fitness = run.evaluate(children)
        merged = np.vstack([pop, children[: len(child_fitness)]])
        merged_fitness = np.concatenate([fitness, child_fitness])
        keep = np.argsort(merged_fitness, kind="stable")[: params.pop]
        pop, fitness = merged[keep], merged_fitness[keep]
    return run.result("ga", seed)
