"""The frozen brute-force grids still describe the current implementation."""

import itertools
import json

import numpy as np
import pytest

from worstcase.envelope import EnvelopeSpec
from worstcase.fitness import Evaluator, ObjectiveSpec
from worstcase.scenario import load
from worstcase.simulation import SimConfig

GRIDS = ["hard_braking_lead", "lead_pulling_away"]


@pytest.fixture(scope="module", params=GRIDS)
def grid(request):
    root = request.config.rootpath
    data = json.loads((root / "tests" / "data" / f"grid_{request.param}.json").read_text())
    return data, load(root / "scenarios" / f"{request.param}.json")


def test_axes_cover_search_space(grid):
    data, logical = grid
    assert data["points_per_axis"] == 21
    for axis, var in zip(data["axes"], logical.variables):
        assert axis[0] == var.lo and axis[-1] == var.hi and len(axis) == 21


def test_sampled_cells_reproduce(grid):
    data, logical = grid
    cells = list(itertools.product(*data["axes"]))
    rng = np.random.default_rng(0)
    picks = set(rng.choice(len(cells), 25, replace=False).tolist())
    for sut, result in data["suts"].items():
        picks.add(cells.index(tuple(result["valid_argmin"])))
    for sut, result in data["suts"].items():
        f = Evaluator(logical, sut, {}, SimConfig(), EnvelopeSpec(), ObjectiveSpec())
        for k in sorted(picks):
            assert f(cells[k]).value == result["values"][k], (sut, cells[k])


def test_summaries_consistent(grid):
    data, _ = grid
    for result in data["suts"].values():
        values = np.array(result["values"])
        valid = values <= 1.0  # shaped values start at the penalty offset 3
        assert valid.sum() == result["valid_cells"]
        assert (values[valid] < 0).sum() == result["violating_cells"]
        assert values[valid].min() == result["valid_min"]
