from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from ..scenario import SearchSpace
from .base import BatchMap, Budget, OptimizationResult, Run


@dataclass(frozen=True)
class PSOParams:
    swarm: int = 20
    w: float = 0.7298
    c1: float = 1.49618
    c2: float = 1.49618
    v_init: float = 0.1  # initial speeds drawn from +-v_init * interval width

    def __post_init__(self) -> None:
        if self.swarm < 2:
            raise ValueError("swarm must be >= 2")


def pso_update(
    x: np.ndarray,
    v: np.ndarray,
    pbest: np.ndarray,
    gbest: np.ndarray,
    params: PSOParams,
    r1: np.ndarray,
    r2: np.ndarray,
    space: SearchSpace,
) -> tuple[np.ndarray, np.ndarray]:
    """One velocity/position update; clamped axes lose their velocity."""
    v = params.w * v + params.c1 * r1 * (pbest - x) + params.c2 * r2 * (gbest - x)
    x_new = x + v
    clipped = np.clip(x_new, space.lower, space.upper)
    v = np.where(clipped != x_new, 0.0, v)
    return clipped, v


def particle_swarm(
    f: Callable[[np.ndarray], Any],
    space: SearchSpace,
    budget: Budget = Budget(),
    seed: int = 0,
    params: Optional[PSOParams | dict] = None,
    *,
    batch_map: Optional[BatchMap] = None,
) -> OptimizationResult:
    """Global-best particle swarm minimizing ``f`` over ``space``."""
    if not isinstance(params, PSOParams):
        params = PSOParams(**(params or {}))
    rng = np.random.default_rng(seed)
    run = Run(f, space, budget, batch_map)

    x = space.sample(rng, params.swarm)
    v = rng.uniform(-1.0, 1.0, x.shape) * params.v_init * space.widths
    fx = run.evaluate(x)
    n = len(fx)
    x, v = x[:n], v[:n]
    pbest, pbest_f = x.copy(), fx.copy()
    while not run.done:
        gbest = pbest[int(np.argmin(pbest_f))]
        r1 = rng.random(x.shape)
        r2 = rng.random(x.shape)
        x, v = pso_update(x, v, pbest, gbest, params, r1, r2, space)
        fx = run.evaluate(x)
        m = len(fx)
        better = fx < pbest_f[:m]
        pbest[:m][better] = x[:m][better]
        pbest_f[:m][better] = fx[better]
    return run.result("pso", seed)
