from __future__ import annotations

import numpy as np
import pytest

from worstcase.scenario import LogicalScenario, VariableSpec
from worstcase.simulation import SimConfig, StateSeries, Trace


def logical(variables, fixed=None, id="s") -> LogicalScenario:
    """Build a logical scenario from ``{name: (lo, hi)}``."""
    return LogicalScenario(
        id=id,
        variables=tuple(VariableSpec(n, "", tuple(map(float, iv))) for n, iv in variables.items()),
        fixed=dict(fixed or {}),
    )


def series(s, v, d=0.0, lane=0, a=0.0) -> StateSeries:
    s = np.asarray(s, dtype=float)
    full = lambda x, dtype=float: np.broadcast_to(np.asarray(x, dtype=dtype), s.shape).copy()
    return StateSeries(s=s, d=full(d), v=full(v), a=full(a), lane=full(lane, int))


def make_trace(ego: StateSeries, agents: dict, targets=None, config: SimConfig = SimConfig()) -> Trace:
    n = len(ego.s)
    t = np.full(n, -1, dtype=int) if targets is None else np.asarray(targets, dtype=int)
    return Trace(np.arange(n) * config.dt, ego, agents, t, [], config)


def random_trace(rng: np.random.Generator, samples: int = 50) -> Trace:
    """Random multi-lane traffic snapshot sequence, not physically consistent."""
    cfg = SimConfig(lanes=int(rng.integers(1, 4)))
    ego_lane = rng.integers(0, cfg.lanes, samples)
    ego = StateSeries(
        s=rng.uniform(0, 100, samples),
        d=ego_lane * cfg.lane_width + rng.uniform(-1.5, 1.5, samples),
        v=rng.uniform(0, 35, samples),
        a=np.zeros(samples),
        lane=ego_lane,
    )
    agents = {}
    for i in range(int(rng.integers(0, 5))):
        lane = rng.integers(0, cfg.lanes, samples)
        agents[f"agent{i + 1}"] = StateSeries(
            s=rng.uniform(-60, 160, samples),
            d=lane * cfg.lane_width,
            v=rng.uniform(0, 35, samples),
            a=np.zeros(samples),
            lane=lane,
        )
    targets = np.where(rng.random(samples) < 0.4, rng.integers(0, cfg.lanes, samples), -1)
    return make_trace(ego, agents, targets, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, shown at the end of the run
_CRITERIA: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    def report(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
