"""Brute-force grid evaluation of a logical scenario, frozen to JSON.

Usage: python tools/grid_oracle.py SCENARIO.json POINTS_PER_AXIS OUT.json SUT [SUT ...]

Each grid cell is simulated with the default simulation and envelope
settings and scored with the worst-case quality function. The output holds
the grid axes and, per SUT, every cell value plus a summary.
"""

from __future__ import annotations

import itertools
import json
import sys
import time

import numpy as np

from worstcase.envelope import EnvelopeSpec
from worstcase.fitness import Evaluator, ObjectiveSpec
from worstcase.scenario import load
from worstcase.simulation import SimConfig


def grid_axes(logical, points: int) -> list[list[float]]:
    return [np.linspace(v.lo, v.hi, points).tolist() for v in logical.variables]


def evaluate_grid(logical, sut: str, points: int) -> dict:
    f = Evaluator(logical, sut, {}, SimConfig(), EnvelopeSpec(), ObjectiveSpec())
    axes = grid_axes(logical, points)
    values, violated, valid = [], [], []
    for cell in itertools.product(*axes):
        q = f(cell)
        values.append(q.value)
        violated.append(q.violated)
        valid.append(q.components["shaping"] == 0)
    values = np.array(values)
    valid = np.array(valid)
    k = int(np.argmin(np.where(valid, values, np.inf)))
    return {
        "values": values.tolist(),
        "valid_cells": int(valid.sum()),
        "violating_cells": int(np.sum(violated)),
        "valid_min": float(values[k]),
        "valid_argmin": list(itertools.product(*axes))[k],
    }


def main(argv: list[str]) -> None:
    path, points, out, *suts = argv
    logical = load(path)
    points = int(points)
    result = {"scenario": logical.id, "points_per_axis": points, "axes": grid_axes(logical, points), "suts": {}}
    for sut in suts:
        t0 = time.time()
        result["suts"][sut] = evaluate_grid(logical, sut, points)
        summary = {k: v for k, v in result["suts"][sut].items() if k != "values"}
        print(sut, summary, f"{time.time() - t0:.0f}s", flush=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(result, fh)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1:])
