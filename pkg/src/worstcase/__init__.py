"""Search-based worst-case scenario testing for driving controllers."""

from .campaign import (
    ComparisonReport,
    GateVerdict,
    WorstCaseRecord,
    compare_systems,
    load_records,
    release_gate,
    run_campaign,
)
from .config import CampaignConfig, load_config
from .core import Action, Neighbor, Observation, VehicleState
from .envelope import EnvelopeSpec, MarginReport, instantaneous_margin, trace_margin, ttc
from .fitness import ObjectiveSpec, QualityValue, evaluate_utilization, evaluate_worst_case, shaping_penalty
from .scenario import (
    ConcreteScenario,
    LogicalScenario,
    SearchSpace,
    VariableSpec,
    instantiate,
    project,
    search_space,
    validate_logical,
)
from .simulation import SimConfig, Trace, build_world, run_closed_loop, step
from .sut import make_sut

__version__ = "0.1.0"

__all__ = [
    "Action",
    "CampaignConfig",
    "ComparisonReport",
    "ConcreteScenario",
    "EnvelopeSpec",
    "GateVerdict",
    "LogicalScenario",
    "MarginReport",
    "Neighbor",
    "ObjectiveSpec",
    "Observation",
    "QualityValue",
    "SearchSpace",
    "SimConfig",
    "Trace",
    "VariableSpec",
    "VehicleState",
    "WorstCaseRecord",
    "build_world",
    "compare_systems",
    "evaluate_utilization",
    "evaluate_worst_case",
    "instantaneous_margin",
    "instantiate",
    "load_config",
    "load_records",
    "make_sut",
    "project",
    "release_gate",
    "run_campaign",
    "run_closed_loop",
    "search_space",
    "shaping_penalty",
    "step",
    "trace_margin",
    "ttc",
    "validate_logical",
]
