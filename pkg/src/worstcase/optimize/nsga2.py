from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ..scenario import SearchSpace
from .base import BatchMap, Budget, OptimizationResult, Run, blend_crossover, gaussian_mutation


def dominates(p: Sequence[float], q: Sequence[float]) -> bool:
    """Minimization: ``p`` is no worse everywhere and strictly better somewhere."""
    p, q = np.asarray(p), np.asarray(q)
    return bool(np.all(p <= q) and np.any(p < q))


def non_dominated_sort(points: Sequence[Sequence[float]]) -> list[list[int]]:
    """Fast non-dominated sorting; returns fronts as lists of input indices."""
    if len(points) == 0:
        return []
    dims = {len(p) for p in points}
    if len(dims) != 1:
        raise ValueError(f"objective vectors have mixed dimensions {sorted(dims)}")
    P = np.asarray(points, dtype=float)
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    fronts = []
    current = [int(i) for i in np.flatnonzero(counts == 0)]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(values: np.ndarray) -> np.ndarray:
    """Crowding distance within one front; boundary points get +inf."""
    F = np.atleast_2d(np.asarray(values, dtype=float))
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        dist[order[0]] = dist[order[-1]] = np.inf
        span = F[order[-1], k] - F[order[0], k]
        if span <= 0:
            continue
        dist[order[1:-1]] += (F[order[2:], k] - F[order[:-2], k]) / span
    return dist


def rank_and_crowding(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = np.zeros(len(values), dtype=int)
    crowd = np.zeros(len(values))
    for r, front in enumerate(non_dominated_sort(values)):
        rank[front] = r
        crowd[front] = crowding_distance(values[front])
    return rank, crowd


def select_survivors(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of ``count`` survivors: whole fronts first, then most crowded-apart."""
    chosen: list[int] = []
    for front in non_dominated_sort(values):
        if len(chosen) + len(front) <= count:
            chosen.extend(front)
            continue
        crowd = crowding_distance(values[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(np.asarray(front)[order[: count - len(chosen)]].tolist())
        break
    return np.array(chosen, dtype=int)


@dataclass(frozen=True)
class NSGA2Params:
    pop: int = 20
    crossover_rate: float = 0.9
    sigma_rel: float = 0.1
    mutation_rate: Optional[float] = None

    def __post_init__(self) -> None:
        if self.pop < 2:
            raise ValueError("population must be >= 2")


def _crowded_tournament(rank: np.ndarray, crowd: np.ndarray, rng: np.random.Generator) -> int:
    i, j = rng.choice(len(rank), size=2, replace=False)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    return int(i if crowd[i] >= crowd[j] else j)


def nsga2(
    f: Callable[[np.ndarray], Any],
    space: SearchSpace,
    budget: Budget = Budget(),
    seed: int = 0,
    params: Optional[NSGA2Params | dict] = None,
    *,
    objectives: int = 2,
    batch_map: Optional[BatchMap] = None,
) -> OptimizationResult:
    """Multi-objective minimization; the result carries the final non-dominated set."""
    if not isinstance(params, NSGA2Params):
        params = NSGA2Params(**(params or {}))
    if objectives < 2:
        raise ValueError("nsga2 needs at least two objectives")
    rate = params.mutation_rate if params.mutation_rate is not None else 1.0 / space.dims
    rng = np.random.default_rng(seed)
    run = Run(f, space, budget, batch_map, objectives=objectives)

    pop = space.sample(rng, params.pop)
    F = run.evaluate(pop)
    pop = pop[: len(F)]
    while not run.done and len(pop) >= 2:
        rank, crowd = rank_and_crowding(F)
        children = []
        while len(children) < params.pop:
            p1 = pop[_crowded_tournament(rank, crowd, rng)]
            p2 = pop[_crowded_tournament(rank, crowd, rng)]
            if rng.random() < params.crossover_rate:
                c1, c2 = blend_crossover(p1, p2, rng)
            else:
                c1, c2 = p1.copy(), p2.copy()
            children.append(gaussian_mutation(c1, space, params.sigma_rel, rate, rng))
            children.append(gaussian_mutation(c2, space, params.sigma_rel, rate, rng))
        children = np.clip(np.array(children[: params.pop]), space.lower, space.upper)
        FC = run.evaluate(children)
        merged = np.vstack([pop, children[: len(FC)]])
        merged_F = np.vstack([F, FC])
        keep = select_survivors(merged_F, params.pop)
        pop, F = merged[keep], merged_F[keep]

    first = non_dominated_sort(F)[0] if len(F) else []
    return run.result("nsga2", seed, pareto_x=pop[first], pareto_values=F[first])
