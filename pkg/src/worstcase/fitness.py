"""Quality functions over concrete scenarios.

Convention: lower quality means worse SUT behavior and optimizers minimize,
so the worst case is the global minimum. Valid scenarios score their trace
margin in [-1, 1]; ill-formed scenarios score ``P + violation_measure`` with
``P > 2``, which keeps every valid scenario strictly better for a minimizer
while still pointing toward the valid region.

A scenario is ill-formed when vehicles overlap at the start or when the
start state already lies outside the envelope: neither says anything about
the SUT, which has not acted yet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, Mapping, Optional, Sequence, Union

from .envelope import EnvelopeSpec, MarginReport, trace_margin
from .scenario import ConcreteScenario, LogicalScenario, instantiate
from .simulation import SimConfig, Trace, run_closed_loop
from .sut import SUT, make_sut

MODES = ("worst_case", "utilization", "multi")


class FitnessError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveSpec:
    mode: str = "worst_case"
    penalty: float = 3.0
    overlap_normalizer: float = 10.0  # m of overlap that adds 1 to the penalty
    gap_variable: Optional[str] = None  # utilization / multi only

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise FitnessError(f"unknown objective mode {self.mode!r}; expected one of {MODES}")
        if not self.penalty > 2:
            raise FitnessError("penalty offset must exceed 2")
        if not self.overlap_normalizer > 0:
            raise FitnessError("overlap_normalizer must be positive")
        if self.mode != "worst_case" and not self.gap_variable:
            raise FitnessError(f"objective mode {self.mode!r} needs gap_variable")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ObjectiveSpec":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise FitnessError(f"unknown objective keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ShapingReport:
    overlap_depth: float = 0.0  # total initial overlap, m
    start_deficit: float = 0.0  # -m(0) when the start is outside the envelope, else 0

    @property
    def ok(self) -> bool:
        return self.overlap_depth <= 0 and self.start_deficit <= 0


def shaping_report(trace: Trace, margins: MarginReport) -> ShapingReport:
    return ShapingReport(
        overlap_depth=trace.validity.overlap_depth,
        start_deficit=max(0.0, -float(margins.margins[0])),
    )


def shaping_penalty(report: ShapingReport, objective: ObjectiveSpec = ObjectiveSpec()) -> float:
    if report.ok:
        return 0.0
    measure = report.overlap_depth / objective.overlap_normalizer + report.start_deficit
    return objective.penalty + measure


Value = Union[float, tuple[float, ...]]


@dataclass(frozen=True)
class QualityValue:
    value: Value
    components: Mapping[str, Any] = field(default_factory=dict)
    violated: bool = False

    def to_dict(self) -> dict[str, Any]:
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"value": value, "violated": self.violated, "components": dict(self.components)}


def _worst_case_part(trace: Trace, envelope: EnvelopeSpec, objective: ObjectiveSpec) -> tuple[float, dict, bool]:
    report = trace_margin(trace, envelope)
    shaping = shaping_report(trace, report)
    penalty = shaping_penalty(shaping, objective)
    components = {
        "shaping": penalty,
        "overlap_depth": shaping.overlap_depth,
        "start_deficit": shaping.start_deficit,
        **report.to_dict(),
    }
    if penalty > 0:
        return penalty, components, False
    return report.m_star, components, report.violated


def _gap_value(logical: LogicalScenario, scenario: ConcreteScenario, name: Optional[str]) -> float:
    if name in logical.names:
        return scenario.values[logical.names.index(name)]
    if name in logical.fixed:
        return float(logical.fixed[name])
    raise FitnessError(f"logical scenario {logical.id!r} does not bind gap variable {name!r}")


def _utilization_part(
    trace: Trace, gap: float, objective: ObjectiveSpec, invalid_penalty: float
) -> tuple[float, dict]:
    # the first decision judges the opportunity the scenario presented; later
    # decisions concern gaps that arose from the ego's own motion
    if invalid_penalty > 0:
        return invalid_penalty, {"decision": "invalid", "decision_time": None}
    for t, event in trace.sut_events:
        if event == "lane-change-declined":
            return -gap, {"decision": "declined", "decision_time": t}
        if event == "lane-change-requested":
            return objective.penalty, {"decision": "accepted", "decision_time": t}
    return objective.penalty, {"decision": "none", "decision_time": None}


def evaluate_worst_case(
    scenario: ConcreteScenario,
    logical: LogicalScenario,
    sut: SUT,
    config: SimConfig,
    envelope: EnvelopeSpec,
    objective: ObjectiveSpec = ObjectiveSpec(),
) -> QualityValue:
    trace = run_closed_loop(scenario, logical, sut, config)
    value, components, violated = _worst_case_part(trace, envelope, objective)
    return QualityValue(value, components, violated)


def evaluate_utilization(
    scenario: ConcreteScenario,
    logical: LogicalScenario,
    sut: SUT,
    config: SimConfig,
    objective: ObjectiveSpec,
    envelope: EnvelopeSpec = EnvelopeSpec(),
) -> QualityValue:
    """Score how large an opportunity the SUT declined (-gap), or +P if it took it.

    The SUT's first lane-change decision counts.
    """
    gap = _gap_value(logical, scenario, objective.gap_variable)
    trace = run_closed_loop(scenario, logical, sut, config)
    report = trace_margin(trace, envelope)
    penalty = shaping_penalty(shaping_report(trace, report), objective)
    value, components = _utilization_part(trace, gap, objective, penalty)
    return QualityValue(value, {"gap": gap, "shaping": penalty, **components}, False)


def evaluate_multi(
    scenario: ConcreteScenario,
    logical: LogicalScenario,
    sut: SUT,
    config: SimConfig,
    envelope: EnvelopeSpec,
    objective: ObjectiveSpec,
) -> QualityValue:
    """Two objectives from one run: worst-case margin and gap utilization."""
    gap = _gap_value(logical, scenario, objective.gap_variable)
    trace = run_closed_loop(scenario, logical, sut, config)
    margin, components, violated = _worst_case_part(trace, envelope, objective)
    util, util_components = _utilization_part(trace, gap, objective, components["shaping"])
    return QualityValue(
        (margin, util), {**components, "gap": gap, **util_components}, violated
    )


def evaluate(
    scenario: ConcreteScenario,
    logical: LogicalScenario,
    sut: SUT,
    config: SimConfig,
    envelope: EnvelopeSpec,
    objective: ObjectiveSpec,
) -> QualityValue:
    if objective.mode == "worst_case":
        return evaluate_worst_case(scenario, logical, sut, config, envelope, objective)
    if objective.mode == "utilization":
        return evaluate_utilization(scenario, logical, sut, config, objective, envelope)
    return evaluate_multi(scenario, logical, sut, config, envelope, objective)


@dataclass(frozen=True)
class Evaluator:
    """Picklable quality function over raw value vectors.

    A fresh SUT is built for every evaluation, so stateful controllers are
    safe under concurrent evaluation.
    """

    logical: LogicalScenario
    sut_name: str
    sut_params: Mapping[str, Any]
    config: SimConfig
    envelope: EnvelopeSpec
    objective: ObjectiveSpec

    def __call__(self, values: Sequence[float]) -> QualityValue:
        scenario = instantiate(self.logical, values)
        sut = make_sut(self.sut_name, self.sut_params)
        q = evaluate(scenario, self.logical, sut, self.config, self.envelope, self.objective)
        value = q.value
        if not all(math.isfinite(x) for x in (value if isinstance(value, tuple) else (value,))):
            raise FitnessError(f"non-finite quality {value!r} for {list(values)!r}")
        return q
