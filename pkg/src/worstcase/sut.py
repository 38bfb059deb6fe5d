"""Systems under test.

A SUT is any callable ``Observation -> Action`` invoked once per simulation
step. Stateful controllers are allowed but need one instance per concurrent
run; the built-in controllers below are stateless.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Mapping, Optional, Protocol

from .core import Action, Neighbor, Observation

__all__ = [
    "AccFlawed",
    "AccParams",
    "AccReference",
    "LaneChangeDecider",
    "LaneChangeParams",
    "SUT",
    "acc_flawed",
    "acc_reference",
    "lane_change_decider",
    "lead_vehicle",
    "make_sut",
    "target_lane_gaps",
]


class SUT(Protocol):
    def __call__(self, obs: Observation) -> Action: ...


@dataclass(frozen=True)
class AccParams:
    tau: float = 1.0  # time gap, s
    d0: float = 2.0  # standstill gap, m
    v_set: float = 30.0
    kp: float = 0.5
    kv: float = 1.0
    ttc_aeb: float = 2.5
    k_set: float = 0.5  # speed-tracking gain for free flow
    a_min: float = -10.0
    a_max: float = 3.0
    sensor_range: float = 200.0
    aeb: bool = True

    def __post_init__(self) -> None:
        for name in ("tau", "d0", "v_set", "kp", "ttc_aeb", "k_set", "a_max", "sensor_range"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ACC parameter {name} must be positive")
        if self.kv < 0:
            raise ValueError("ACC parameter kv must be nonnegative")
        if not self.a_min < 0:
            raise ValueError("ACC parameter a_min must be negative")


def lead_vehicle(obs: Observation, sensor_range: float = math.inf) -> Optional[Neighbor]:
    """Nearest vehicle ahead in the ego lane, within sensor range."""
    lead = None
    for nb in obs.neighbors:
        if nb.ahead and nb.lane == obs.ego.lane and nb.gap <= sensor_range:
            if lead is None or nb.gap < lead.gap:
                lead = nb
    return lead


def acc_reference(obs: Observation, params: AccParams = AccParams()) -> Action:
    v = obs.ego.v
    a = params.k_set * (params.v_set - v)
    aeb = False
    lead = lead_vehicle(obs, params.sensor_range)
    if lead is not None:
        desired = params.d0 + params.tau * v
        a = min(a, params.kp * (lead.gap - desired) + params.kv * lead.dv)
        if params.aeb:
            closing = -lead.dv
            ttc = max(lead.gap, 0.0) / closing if closing > 0 else math.inf
            if ttc < params.ttc_aeb:
                a, aeb = params.a_min, True
    return Action(min(params.a_max, max(params.a_min, a)), aeb=aeb)


@functools.lru_cache(maxsize=64)
def _without_speed_feedback(params: AccParams) -> AccParams:
    return replace(params, kv=0.0, aeb=False)


def acc_flawed(obs: Observation, params: AccParams = AccParams()) -> Action:
    """ACC that ignores the relative speed and has no emergency braking."""
    return acc_reference(obs, _without_speed_feedback(params))


@dataclass(frozen=True)
class LaneChangeParams:
    g_front_min: float = 20.0
    g_rear_min: float = 15.0
    target_lane: int = 1
    acc: AccParams = field(default_factory=AccParams)


def target_lane_gaps(obs: Observation, lane: int) -> tuple[float, float]:
    """Front and rear bumper gaps on ``lane``; +inf where the lane is empty."""
    front = rear = math.inf
    for nb in obs.neighbors:
        if nb.lane != lane:
            continue
        if nb.ahead:
            front = min(front, nb.gap)
        else:
            rear = min(rear, -nb.gap)
    return front, rear


def lane_change_decider(obs: Observation, params: LaneChangeParams = LaneChangeParams()) -> Action:
    """Gap-acceptance lane change toward ``params.target_lane``.

    Longitudinal control is the reference ACC. While the ego vehicle is not
    yet in the target lane, every step is a lane-change opportunity: it is
    requested when both target-lane gaps reach their thresholds, otherwise
    the action is flagged as declined.
    """
    base = acc_reference(obs, params.acc)
    if obs.ego.lane == params.target_lane:
        return base
    front, rear = target_lane_gaps(obs, params.target_lane)
    if front >= params.g_front_min and rear >= params.g_rear_min:
        return base._replace(lane_request=params.target_lane)
    return base._replace(declined=True)


@dataclass(frozen=True)
class AccReference:
    params: AccParams = AccParams()

    def __call__(self, obs: Observation) -> Action:
        return acc_reference(obs, self.params)


@dataclass(frozen=True)
class AccFlawed:
    params: AccParams = AccParams()

    def __call__(self, obs: Observation) -> Action:
        return acc_flawed(obs, self.params)


@dataclass(frozen=True)
class LaneChangeDecider:
    params: LaneChangeParams = LaneChangeParams()

    def __call__(self, obs: Observation) -> Action:
        return lane_change_decider(obs, self.params)


_REGISTRY: dict[str, Callable[[Mapping[str, Any]], SUT]] = {
    "acc_reference": lambda p: AccReference(AccParams(**p)),
    "acc_flawed": lambda p: AccFlawed(AccParams(**p)),
    "lane_change": lambda p: LaneChangeDecider(
        LaneChangeParams(
            **{k: v for k, v in p.items() if k != "acc"}, acc=AccParams(**p.get("acc", {}))
        )
    ),
}


def make_sut(name: str, params: Mapping[str, Any] | None = None) -> SUT:
    """Construct a fresh built-in SUT by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown SUT {name!r}; known: {sorted(_REGISTRY)}") from None
    try:
        return factory(dict(params or {}))
    except TypeError as exc:
        raise ValueError(f"bad parameters for SUT {name!r}: {exc}") from exc


def describe(sut: SUT) -> dict[str, Any]:
    params = getattr(sut, "params", None)
    return {"type": type(sut).__name__, "params": asdict(params) if params is not None else None}
