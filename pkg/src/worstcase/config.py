"""Campaign configuration files.

A campaign config is a JSON object; relative paths resolve against the
directory of the config file::

    {
      "suite": ["../scenarios/hard_braking_lead.json",
                {"path": "../scenarios/lane_change_gap.json",
                 "objective": {"mode": "utilization", "gap_variable": "agent1.gap0"},
                 "sut": {"name": "lane_change"}}],
      "sut": {"name": "acc_reference", "params": {}},
      "envelope": {"tau": 0.9},
      "sim": {"dt": 0.01, "horizon": 10.0},
      "objective": {"mode": "worst_case", "penalty": 3.0},
      "optimizer": {"name": "ga", "params": {"pop": 20}},
      "budget": {"max_evaluations": 2000, "stagnation_window": 500},
      "seeds": [0, 1, 2, 3, 4],
      "output_dir": "out"
    }

Every section except ``suite`` is optional and falls back to the defaults
of the corresponding type. A suite entry may override ``objective`` and
``sut`` for that logical scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .envelope import EnvelopeSpec
from .fitness import FitnessError, ObjectiveSpec
from .optimize import ALGORITHMS, Budget
from .simulation import SimConfig

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
_TOP_LEVEL = {"suite", "sut", "envelope", "sim", "objective", "optimizer", "budget", "seeds", "output_dir"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SutSpec:
    name: str = "acc_reference"
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SuiteEntry:
    path: Path
    objective: Optional[ObjectiveSpec] = None
    sut: Optional[SutSpec] = None


@dataclass(frozen=True)
class CampaignConfig:
    suite: tuple[SuiteEntry, ...]
    sut: SutSpec = SutSpec()
    envelope: EnvelopeSpec = EnvelopeSpec()
    sim: SimConfig = SimConfig()
    objective: ObjectiveSpec = ObjectiveSpec()
    optimizer: str = "ga"
    optimizer_params: Mapping[str, Any] = field(default_factory=dict)
    budget: Budget = Budget()
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    output_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.suite:
            raise ConfigError("suite must list at least one logical scenario")
        if not self.seeds:
            raise ConfigError("at least one seed required")
        if self.optimizer not in ALGORITHMS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; known: {sorted(ALGORITHMS)}")

    def with_seeds(self, seeds: tuple[int, ...]) -> "CampaignConfig":
        return replace(self, seeds=seeds)


def _section(data: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"section {key!r} must be an object")
    return value


def _sut(data: Mapping[str, Any]) -> SutSpec:
    unknown = set(data) - {"name", "params"}
    if unknown:
        raise ConfigError(f"unknown sut keys: {sorted(unknown)}")
    return SutSpec(str(data.get("name", "acc_reference")), dict(data.get("params", {})))


def from_dict(data: Mapping[str, Any], base: Path = Path(".")) -> CampaignConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("campaign config must be a JSON object")
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        suite = []
        for entry in data.get("suite", []):
            if isinstance(entry, str):
                suite.append(SuiteEntry(base / entry))
            elif isinstance(entry, Mapping) and "path" in entry:
                extra = set(entry) - {"path", "objective", "sut"}
                if extra:
                    raise ConfigError(f"unknown suite entry keys: {sorted(extra)}")
                suite.append(
                    SuiteEntry(
                        base / entry["path"],
                        ObjectiveSpec.from_dict(entry["objective"]) if "objective" in entry else None,
                        _sut(entry["sut"]) if "sut" in entry else None,
                    )
                )
            else:
                raise ConfigError(f"bad suite entry {entry!r}")
        optimizer = _section(data, "optimizer")
        extra = set(optimizer) - {"name", "params"}
        if extra:
            raise ConfigError(f"unknown optimizer keys: {sorted(extra)}")
        budget = _section(data, "budget")
        seeds = tuple(int(s) for s in data.get("seeds", DEFAULT_SEEDS))
        output = data.get("output_dir")
        return CampaignConfig(
            suite=tuple(suite),
            sut=_sut(_section(data, "sut")),
            envelope=EnvelopeSpec.from_dict(_section(data, "envelope")),
            sim=SimConfig.from_dict(_section(data, "sim")),
            objective=ObjectiveSpec.from_dict(_section(data, "objective")),
            optimizer=str(optimizer.get("name", "ga")),
            optimizer_params=dict(optimizer.get("params", {})),
            budget=Budget(**budget),
            seeds=seeds,
            output_dir=base / output if output is not None else None,
        )
    except ConfigError:
        raise
    except (FitnessError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return from_dict(data, path.parent)
