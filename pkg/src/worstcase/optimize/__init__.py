"""Budgeted black-box minimizers over a box-shaped search space."""

from .base import Budget, OptimizationResult, Run, serial_map, tournament_select
from .ga import GAParams, genetic_algorithm
from .nsga2 import (
    NSGA2Params,
    crowding_distance,
    dominates,
    non_dominated_sort,
    nsga2,
    select_survivors,
)
from .pso import PSOParams, particle_swarm, pso_update
from .random_search import random_search

ALGORITHMS = {
    "random": random_search,
    "ga": genetic_algorithm,
    "pso": particle_swarm,
    "nsga2": nsga2,
}

__all__ = [
    "ALGORITHMS",
    "Budget",
    "GAParams",
    "NSGA2Params",
    "OptimizationResult",
    "PSOParams",
    "Run",
    "crowding_distance",
    "dominates",
    "genetic_algorithm",
    "non_dominated_sort",
    "nsga2",
    "particle_swarm",
    "pso_update",
    "random_search",
    "select_survivors",
    "serial_map",
    "tournament_select",
]
