"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the terminal
summary. The frozen grid oracles live in tests/data and were produced by
tools/grid_oracle.py before any campaign was run.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

import test_envelope
import test_fitness
import test_optimize
import test_scenario
from oracles import bisection_threshold, brute_force_fronts, brute_force_margins, random_objective_sets
from worstcase.campaign import compare_systems, run_campaign
from worstcase.cli import main
from worstcase.config import load_config
from worstcase.envelope import EnvelopeSpec, trace_margin
from worstcase.fitness import Evaluator
from worstcase.optimize import Budget, genetic_algorithm, non_dominated_sort, particle_swarm, random_search
from worstcase.scenario import SearchSpace, load

from conftest import random_trace

pytestmark = pytest.mark.slow

BRAKING = "hard_braking_lead"
OPENING = "lead_pulling_away"


@pytest.fixture(scope="session")
def root(request):
    return request.config.rootpath


@pytest.fixture(scope="session")
def grids(root):
    return {
        name: json.loads((root / "tests" / "data" / f"grid_{name}.json").read_text())
        for name in (BRAKING, OPENING)
    }


def _campaign(root, tmp_path_factory, sut):
    config = load_config(root / "configs" / f"{sut}_acc.json")
    start = time.monotonic()
    records = run_campaign(config, output_dir=tmp_path_factory.mktemp(sut))
    return {r.logical_id: r for r in records}, time.monotonic() - start


@pytest.fixture(scope="session")
def flawed(root, tmp_path_factory):
    return _campaign(root, tmp_path_factory, "flawed")


@pytest.fixture(scope="session")
def reference(root, tmp_path_factory):
    return _campaign(root, tmp_path_factory, "reference")


def test_c1_fault_detection(flawed, grids, criterion):
    records, elapsed = flawed
    r = records[BRAKING]
    grid = grids[BRAKING]["suts"]["acc_flawed"]
    ok = (
        r.status == "ok"
        and len(r.per_seed) == 5
        and all(s.evaluations <= 2000 for s in r.per_seed)
        and r.quality < 0
        and grid["violating_cells"] > 0
        and r.quality <= grid["valid_min"] + 0.05
        and elapsed <= 300
    )
    criterion(
        "C1 fault detection",
        ok,
        f"flawed m*={r.quality:.4f} (grid min {grid['valid_min']:.4f}, "
        f"{grid['violating_cells']} violating cells), campaign {elapsed:.0f}s",
    )


def test_c2_safety_confirmation(reference, grids, criterion):
    records, _ = reference
    r = records[BRAKING]
    per_seed = [s.quality for s in r.per_seed]
    grid = grids[BRAKING]["suts"]["acc_reference"]
    ok = r.status == "ok" and len(per_seed) == 5 and min(per_seed) >= 0 and grid["violating_cells"] == 0
    criterion(
        "C2 safety confirmation",
        ok,
        f"reference per-seed m* min {min(per_seed):.3g}; grid violating cells {grid['violating_cells']}",
    )


def test_c3_optimizer_benchmark(criterion):
    space = SearchSpace(((-5.0, 5.0), (-5.0, 5.0)))
    budget = Budget(max_evaluations=2000)
    seeds = range(10)
    best = {
        name: [alg(test_optimize.sphere, space, budget, s).best_value for s in seeds]
        for name, alg in (("ga", genetic_algorithm), ("pso", particle_swarm), ("random", random_search))
    }
    ga_median = float(np.median(best["ga"]))
    pso_median = float(np.median(best["pso"]))
    random_best = min(best["random"])
    ok = ga_median <= 1e-2 and pso_median <= 1e-2 and random_best >= ga_median - 1e-2
    criterion(
        "C3 optimizer benchmark",
        ok,
        f"median GA {ga_median:.2e}, PSO {pso_median:.2e}; best random {random_best:.2e}",
    )


def test_c4_oracle_equivalence(criterion):
    rng = np.random.default_rng(4)
    sort_mismatch = 0
    for dims in (2, 3):
        for _ in range(200):
            pts = random_objective_sets(rng, dims)
            if [set(f) for f in non_dominated_sort(pts)] != brute_force_fronts(pts.tolist()):
                sort_mismatch += 1
    worst = 0.0
    for _ in range(100):
        trace = random_trace(rng)
        report = trace_margin(trace, EnvelopeSpec())
        oracle = np.array(brute_force_margins(trace, EnvelopeSpec()))
        worst = max(worst, float(np.max(np.abs(report.margins - oracle))), abs(report.m_star - oracle.min()))
    ok = sort_mismatch == 0 and worst <= 1e-12
    criterion("C4 oracle equivalence", ok, f"{sort_mismatch} of 400 sorts differ; max margin error {worst:.1e}")


def test_c5_utilization_search(root, tmp_path, criterion):
    config = load_config(root / "configs" / "lane_change_utilization.json")
    record = run_campaign(config, output_dir=tmp_path)[0]
    logical = load(config.suite[0].path)
    objective = config.suite[0].objective
    f = Evaluator(logical, config.sut.name, dict(config.sut.params), config.sim, config.envelope, objective)
    var = logical.variables[0]
    threshold = bisection_threshold(lambda g: f([g]).value < 0, var.lo, var.hi)
    found = -record.quality
    ok = record.status == "ok" and abs(found - threshold) <= 0.5
    criterion("C5 utilization search", ok, f"largest declined gap {found:.3f} m vs bisection {threshold:.3f} m")


def test_c6_determinism(root, tmp_path, criterion):
    data = {
        "suite": [str(root / "scenarios" / f"{s}.json") for s in (BRAKING, OPENING)],
        "sut": {"name": "acc_flawed"},
        "budget": {"max_evaluations": 200, "stagnation_window": None},
        "seeds": [0, 1],
    }
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(data))
    tables = []
    for jobs in (1, 4):
        out = tmp_path / f"jobs{jobs}"
        main(["run", str(cfg), "--out", str(out), "--jobs", str(jobs)])
        tables.append(((out / "quality_table.csv").read_bytes(), (out / "records.json").read_bytes()))
    ok = tables[0] == tables[1] and len(tables[0][0].splitlines()) == 3
    criterion("C6 determinism", ok, "quality table identical for --jobs 1 and --jobs 4" if ok else "outputs differ")


def test_c7_regression_contract(flawed, reference, grids, criterion):
    a = list(flawed[0].values())
    b = list(reference[0].values())
    self_deltas = [r.delta for r in compare_systems(a, a).rows] + [r.delta for r in compare_systems(b, b).rows]
    report = compare_systems(a, b, epsilon=1e-3)
    reachable = {
        name for name, g in grids.items()
        if g["suts"]["acc_flawed"]["violating_cells"] > 0 and g["suts"]["acc_reference"]["violating_cells"] == 0
    }
    flagged = {r.logical_id for r in report.rows if r.verdict != "unchanged"}
    improved = {r.logical_id for r in report.rows if r.verdict == "improved"}
    ok = all(d == 0 for d in self_deltas) and flagged == improved == reachable and not report.regression
    verdicts = ", ".join(f"{r.logical_id}={r.verdict}" for r in report.rows)
    criterion("C7 regression contract", ok, f"self deltas all 0: {all(d == 0 for d in self_deltas)}; {verdicts}")


PROPERTIES = {
    "budget honor and best-so-far monotonicity":
        (test_optimize.TestProperties, "test_budget_feasibility_monotonicity"),
    "margin clipping": (test_envelope.TestProperties, "test_clipping_and_min"),
    "shaping separation": (test_fitness.TestProperties, "test_separation"),
    "projection idempotence": (test_scenario.TestProperties, "test_projection_idempotent_and_feasible"),
}


def test_c8_invariant_suites(root, criterion):
    failures = []
    node_ids = []
    for name, (cls, method) in PROPERTIES.items():
        examples = getattr(cls, method)._hypothesis_internal_use_settings.max_examples
        if examples < 1000:
            failures.append(f"{name}: only {examples} examples")
        node_ids.append(f"tests/{cls.__module__}.py::{cls.__name__}::{method}")
    # a separate process keeps hypothesis from seeing one test run from two executors
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *node_ids],
        cwd=root, capture_output=True, text=True,
    )
    if proc.returncode != 0:
        lines = proc.stdout.strip().splitlines()
        failures.append(lines[-1] if lines else f"pytest exit {proc.returncode}")
    criterion(
        "C8 invariant suites",
        not failures,
        "; ".join(failures) or f"{len(PROPERTIES)} property suites, >= 1000 cases each",
    )
