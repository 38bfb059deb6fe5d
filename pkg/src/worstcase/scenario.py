"""Logical and concrete scenarios.

A logical scenario bundles fixed context, an ordered list of real-valued
variables and their closed intervals. The variable order defines the
coordinate order of the search space; a concrete scenario is one value per
variable, in that order.

Scenario files are JSON::

    {
      "id": "hard_braking_lead",
      "description": "Lead vehicle brakes hard in front of the ego vehicle.",
      "fixed": {"agent1.behavior": "brake", "agent1.brake.t": 1.0},
      "variables": [
        {"name": "ego.v0", "unit": "m/s", "interval": [15.0, 35.0]}
      ],
      "metadata": {"source": "..."}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Raised for malformed scenario files or invalid scenario operations."""


class OutOfBoundsError(ScenarioError):
    def __init__(self, index: int, value: float, bounds: tuple[float, float]):
        self.index = index
        self.value = value
        self.bounds = bounds
        super().__init__(
            f"value {value!r} at index {index} outside [{bounds[0]!r}, {bounds[1]!r}]"
        )


@dataclass(frozen=True)
class VariableSpec:
    name: str
    unit: str
    interval: tuple[float, float]

    @property
    def lo(self) -> float:
        return self.interval[0]

    @property
    def hi(self) -> float:
        return self.interval[1]


@dataclass(frozen=True)
class LogicalScenario:
    """Fixed context, variables and intervals of one equivalence class."""

    id: str
    variables: tuple[VariableSpec, ...]
    description: str = ""
    fixed: Mapping[str, Any] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def bindings(self, values: Sequence[float]) -> dict[str, Any]:
        """Fixed context merged with the variable assignment."""
        out = dict(self.fixed)
        out.update(zip(self.names, (float(x) for x in values)))
        return out


@dataclass(frozen=True)
class SearchSpace:
    bounds: tuple[tuple[float, float], ...]

    @property
    def dims(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds], dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, point: Sequence[float]) -> bool:
        x = np.asarray(point, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dims,) if size is None else (size, self.dims)
        return rng.uniform(self.lower, self.upper, size=shape)


@dataclass(frozen=True)
class ConcreteScenario:
    logical_id: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class Violation:
    code: str  # "empty interval" | "duplicate name" | "no variables" | ...
    message: str
    variable: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(v.message for v in self.violations)


def validate_logical(scenario: LogicalScenario) -> ValidationReport:
    violations: list[Violation] = []
    if scenario.n == 0:
        violations.append(Violation("no variables", f"{scenario.id}: scenario has no variables"))
    seen: set[str] = set()
    for var in scenario.variables:
        if var.name in seen:
            violations.append(
                Violation("duplicate name", f"duplicate variable name {var.name!r}", var.name)
            )
        seen.add(var.name)
        if var.name in scenario.fixed:
            violations.append(
                Violation(
                    "fixed/variable clash",
                    f"variable {var.name!r} is also a fixed-context name",
                    var.name,
                )
            )
        lo, hi = var.interval
        if not (math.isfinite(lo) and math.isfinite(hi)):
            violations.append(
                Violation("unbounded interval", f"variable {var.name!r} has a non-finite bound", var.name)
            )
        elif not lo < hi:
            violations.append(
                Violation(
                    "empty interval",
                    f"variable {var.name!r} has empty interval [{lo!r}, {hi!r}]",
                    var.name,
                )
            )
    return ValidationReport(tuple(violations))


def search_space(scenario: LogicalScenario) -> SearchSpace:
    report = validate_logical(scenario)
    if not report.ok:
        raise ScenarioError(f"invalid logical scenario {scenario.id!r}: {report}")
    return SearchSpace(tuple((float(v.lo), float(v.hi)) for v in scenario.variables))


def instantiate(scenario: LogicalScenario, values: Sequence[float]) -> ConcreteScenario:
    vals = tuple(float(x) for x in values)
    if len(vals) != scenario.n:
        raise ScenarioError(f"expected {scenario.n} values, got {len(vals)}")
    for i, (x, var) in enumerate(zip(vals, scenario.variables)):
        # closed intervals: both bounds are reachable
        if not var.lo <= x <= var.hi:
            raise OutOfBoundsError(i, x, var.interval)
    return ConcreteScenario(scenario.id, vals)


def project(space: SearchSpace, point: Sequence[float]) -> np.ndarray:
    """Clamp ``point`` coordinate-wise into ``space``."""
    x = np.asarray(point, dtype=float)
    if x.shape != (space.dims,):
        raise ScenarioError(f"expected point of length {space.dims}, got shape {x.shape}")
    return np.clip(x, space.lower, space.upper)


# --- JSON (de)serialization -------------------------------------------------


def from_dict(data: Mapping[str, Any]) -> LogicalScenario:
    try:
        variables = tuple(
            VariableSpec(
                name=str(v["name"]),
                unit=str(v.get("unit", "")),
                interval=(float(v["interval"][0]), float(v["interval"][1])),
            )
            for v in data["variables"]
        )
        for v in data["variables"]:
            if len(v["interval"]) != 2:
                raise ScenarioError(f"interval of {v['name']!r} must have two entries")
        return LogicalScenario(
            id=str(data["id"]),
            description=str(data.get("description", "")),
            fixed=dict(data.get("fixed", {})),
            variables=variables,
            metadata=dict(data.get("metadata", {})),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(f"malformed logical scenario: {exc!r}") from exc


def to_dict(scenario: LogicalScenario) -> dict[str, Any]:
    return {
        "id": scenario.id,
        "description": scenario.description,
        "fixed": dict(scenario.fixed),
        "variables": [
            {"name": v.name, "unit": v.unit, "interval": [v.lo, v.hi]} for v in scenario.variables
        ],
        "metadata": dict(scenario.metadata),
    }


def loads(text: str) -> LogicalScenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("logical scenario must be a JSON object")
    return from_dict(data)


def dumps(scenario: LogicalScenario) -> str:
    return json.dumps(to_dict(scenario), indent=2) + "\n"


def load(path: str | Path) -> LogicalScenario:
    return loads(Path(path).read_text(encoding="utf-8"))


def save(scenario: LogicalScenario, path: str | Path) -> None:
    Path(path).write_text(dumps(scenario), encoding="utf-8")
