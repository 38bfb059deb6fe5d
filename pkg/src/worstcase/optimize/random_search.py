from __future__ import annotations

from typing import Any, Callable, Optional

import numpy as np

from ..scenario import SearchSpace
from .base import BatchMap, Budget, OptimizationResult, Run


def random_search(
    f: Callable[[np.ndarray], Any],
    space: SearchSpace,
    budget: Budget = Budget(),
    seed: int = 0,
    params: Optional[dict] = None,
    *,
    batch_map: Optional[BatchMap] = None,
) -> OptimizationResult:
    """Uniform i.i.d. sampling; evaluated in batches of ``params['batch']``."""
    batch = int((params or {}).get("batch", 20))
    if batch < 1:
        raise ValueError("batch must be >= 1")
    rng = np.random.default_rng(seed)
    run = Run(f, space, budget, batch_map)
    while not run.done:
        run.evaluate(space.sample(rng, min(batch, run.remaining)))
    return run.result("random", seed)
