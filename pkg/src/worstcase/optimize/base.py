from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ..scenario import SearchSpace

BatchMap = Callable[[Callable[[np.ndarray], Any], list], list]


def serial_map(f: Callable[[np.ndarray], Any], points: list) -> list:
    return [f(x) for x in points]


@dataclass(frozen=True)
class Budget:
    max_evaluations: int = 2000
    stagnation_window: Optional[int] = 500
    epsilon_improve: float = 1e-6
    wall_clock_limit: Optional[float] = None  # seconds; breaks reproducibility when it triggers

    def __post_init__(self) -> None:
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        if self.epsilon_improve < 0:
            raise ValueError("epsilon_improve must be >= 0")
        if self.stagnation_window is not None and self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")


@dataclass
class OptimizationResult:
    algorithm: str
    seed: int
    termination: str  # "max_evaluations" | "stagnation" | "wall_clock"
    history_x: np.ndarray  # (evaluations, dims)
    history_values: np.ndarray  # (evaluations,) or (evaluations, objectives)
    best_x: np.ndarray
    best_value: Any
    history_raw: list = field(default_factory=list, repr=False)  # what f returned, per evaluation
    pareto_x: Optional[np.ndarray] = None
    pareto_values: Optional[np.ndarray] = None

    @property
    def evaluations(self) -> int:
        return len(self.history_x)

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.history_values)


def scalar_of(raw: Any) -> Any:
    """Quality objects expose ``.value``; plain numbers pass through."""
    return getattr(raw, "value", raw)


class Run:
    """Evaluation bookkeeping shared by all algorithms.

    Candidates are projected into the space, evaluated batch-wise through
    ``batch_map`` and joined in candidate order, so results never depend on
    how the batch was parallelized.
    """

    def __init__(
        self,
        f: Callable[[np.ndarray], Any],
        space: SearchSpace,
        budget: Budget,
        batch_map: Optional[BatchMap] = None,
        objectives: Optional[int] = None,
    ):
        self.f = f
        self.space = space
        self.budget = budget
        self.batch_map = batch_map or serial_map
        self.objectives = objectives
        self.xs: list[np.ndarray] = []
        self.values: list[Any] = []
        self.raw: list[Any] = []
        self.termination: Optional[str] = None
        self._anchor = math.inf if objectives is None else np.full(objectives, math.inf)
        self._since_improvement = 0
        self._start = time.monotonic()

    @property
    def remaining(self) -> int:
        return self.budget.max_evaluations - len(self.xs)

    @property
    def done(self) -> bool:
        return self.termination is not None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate up to ``remaining`` of ``points``; fewer values come back at the budget limit."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        points = np.clip(points, self.space.lower, self.space.upper)[: max(self.remaining, 0)]
        batch = [p.copy() for p in points]
        raw = self.batch_map(self.f, batch) if batch else []
        vals = [scalar_of(r) for r in raw]
        if self.objectives is None:
            out = np.array([float(v) for v in vals], dtype=float)
        else:
            out = np.array(vals, dtype=float).reshape(len(vals), self.objectives)
        for x, v, r in zip(batch, out, raw):
            self.xs.append(x)
            self.values.append(v)
            self.raw.append(r)
            self._track(v)
        self._check_stop()
        return out

    def _track(self, v: Any) -> None:
        eps = self.budget.epsilon_improve
        if self.objectives is None:
            improved = v < self._anchor - eps
            if improved:
                self._anchor = v
        else:
            better = v < self._anchor - eps
            improved = bool(better.any())
            self._anchor = np.minimum(self._anchor, np.where(better, v, self._anchor))
        self._since_improvement = 0 if improved else self._since_improvement + 1

    def _check_stop(self) -> None:
        b = self.budget
        if self.remaining <= 0:
            self.termination = "max_evaluations"
        elif b.stagnation_window is not None and self._since_improvement >= b.stagnation_window:
            self.termination = "stagnation"
        elif b.wall_clock_limit is not None and time.monotonic() - self._start >= b.wall_clock_limit:
            self.termination = "wall_clock"

    def result(self, algorithm: str, seed: int, **extra: Any) -> OptimizationResult:
        dims = self.space.dims
        history_x = np.array(self.xs, dtype=float).reshape(len(self.xs), dims)
        if self.objectives is None:
            history_values = np.array(self.values, dtype=float)
            k = int(np.argmin(history_values))
            best_x, best_value = history_x[k], float(history_values[k])
        else:
            history_values = np.array(self.values, dtype=float).reshape(len(self.values), self.objectives)
            best_x, best_value = None, None
        return OptimizationResult(
            algorithm=algorithm,
            seed=seed,
            termination=self.termination or "max_evaluations",
            history_x=history_x,
            history_values=history_values,
            best_x=best_x,
            best_value=best_value,
            history_raw=self.raw,
            **extra,
        )


def tournament_select(fitness: Sequence[float], k: int, rng: np.random.Generator) -> int:
    """Index of the best (smallest) of ``k`` distinct random contenders."""
    fitness = np.asarray(fitness)
    contenders = rng.choice(len(fitness), size=min(k, len(fitness)), replace=False)
    return int(contenders[np.argmin(fitness[contenders])])


def blend_crossover(
    p1: np.ndarray, p2: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic crossover with one random weight per mating."""
    alpha = rng.random()
    return alpha * p1 + (1 - alpha) * p2, (1 - alpha) * p1 + alpha * p2


def gaussian_mutation(
    x: np.ndarray, space: SearchSpace, sigma_rel: float, rate: float, rng: np.random.Generator
) -> np.ndarray:
    mask = rng.random(space.dims) < rate
    noise = rng.normal(0.0, 1.0, space.dims) * sigma_rel * space.widths
    return x + np.where(mask, noise, 0.0)
