"""Fixed-step closed-loop simulation on a straight multi-lane highway.

Vehicles are point-kinematic rectangles integrated with explicit Euler. The
ego vehicle is driven by a system under test (SUT); traffic agents follow
scripted behaviors and do not react to the ego vehicle.

Scenario names bind to simulator entities as ``<entity>.<key>``:

=======================  ===================================================
``ego.v0``               initial ego speed (m/s)
``ego.s0``               initial ego position (m), default 0
``ego.lane0``            initial ego lane, default 0
``agentN.gap0``          initial bumper-to-bumper gap to the ego (m);
                         negative places the agent behind the ego
``agentN.v0``            initial agent speed (m/s)
``agentN.dv0``           initial speed relative to ``ego.v0``, used when
                         ``agentN.v0`` is absent (default 0)
``agentN.lane0``         initial agent lane, default 0
``agentN.behavior``      ``constant`` | ``brake`` | ``cut_in``
``agentN.brake.t``       braking onset (s)
``agentN.brake.decel``   braking deceleration, positive (m/s^2)
``agentN.brake.hold``    braking duration (s); default: until standstill
``agentN.cutin.t``       lane change onset (s)
``agentN.cutin.target_lane``  lane the agent moves into
``agentN.cutin.duration`` lane change duration (s), default 2
=======================  ===================================================
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import Action, Neighbor, Observation, VehicleState
from .scenario import ConcreteScenario, LogicalScenario, ScenarioError

__all__ = [
    "BindingError",
    "BrakeAt",
    "ConstantSpeed",
    "CutIn",
    "Overlap",
    "SimConfig",
    "StateSeries",
    "Trace",
    "TrafficAgent",
    "VehicleState",
    "World",
    "WorldValidity",
    "build_world",
    "observe",
    "run_closed_loop",
    "step",
]


class BindingError(ScenarioError):
    """Unknown, missing or ill-typed scenario binding."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    horizon: float = 10.0
    lanes: int = 2
    lane_width: float = 3.5
    a_min: float = -10.0
    a_max: float = 3.0
    lateral_speed: float = 1.5
    vehicle_length: float = 4.5
    vehicle_width: float = 1.8

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon >= self.dt:
            raise ValueError("horizon must be at least one timestep")
        if self.lanes < 1:
            raise ValueError("at least one lane required")
        if not self.a_min < 0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if self.lateral_speed <= 0 or self.vehicle_length <= 0 or self.lane_width <= 0:
            raise ValueError("lateral_speed, vehicle_length and lane_width must be positive")

    @property
    def steps(self) -> int:
        # guard against 10/0.01 = 999.999... style rounding
        return int(math.floor(self.horizon / self.dt + 1e-9))

    def lane_center(self, lane: int) -> float:
        return lane * self.lane_width

    def lane_of(self, d: float) -> int:
        return min(self.lanes - 1, max(0, int(round(d / self.lane_width))))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sim config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ConstantSpeed:
    def accel(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class BrakeAt:
    t: float
    decel: float
    hold: float = math.inf

    def accel(self, t: float) -> float:
        if self.t - 1e-9 <= t < self.t + self.hold - 1e-9:
            return -self.decel
        return 0.0


@dataclass(frozen=True)
class CutIn:
    t: float
    target_lane: int
    duration: float = 2.0

    def accel(self, t: float) -> float:
        return 0.0


Behavior = Union[ConstantSpeed, BrakeAt, CutIn]


@dataclass(frozen=True)
class TrafficAgent:
    id: str
    initial: VehicleState
    behavior: Behavior = ConstantSpeed()


@dataclass(frozen=True)
class Overlap:
    first: str
    second: str
    depth: float  # m, > 0


@dataclass(frozen=True)
class WorldValidity:
    """Physically invalid start configurations, flagged rather than raised."""

    overlaps: tuple[Overlap, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.overlaps

    @property
    def overlap_depth(self) -> float:
        return sum(o.depth for o in self.overlaps)


@dataclass(frozen=True)
class World:
    config: SimConfig
    time: float
    ego: VehicleState
    agents: tuple[VehicleState, ...]
    specs: tuple[TrafficAgent, ...]
    ego_target: Optional[int] = None  # lane of an ongoing ego lane change
    agent_lateral: tuple[float, ...] = ()  # lateral speed of each agent's cut-in
    validity: WorldValidity = field(default_factory=WorldValidity)

    @property
    def lane_change_active(self) -> bool:
        return self.ego_target is not None


_BINDING = re.compile(r"^(ego|agent\d+)\.(.+)$")
_EGO_KEYS = {"v0", "s0", "lane0"}
_AGENT_KEYS = {
    "v0",
    "dv0",
    "gap0",
    "lane0",
    "behavior",
    "brake.t",
    "brake.decel",
    "brake.hold",
    "cutin.t",
    "cutin.target_lane",
    "cutin.duration",
}


def _num(bindings: Mapping[str, Any], name: str, default: Any = None) -> float:
    if name not in bindings:
        if default is None:
            raise BindingError(f"missing binding {name!r}")
        return float(default)
    value = bindings[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BindingError(f"binding {name!r} must be numeric, got {value!r}")
    return float(value)


def _lane(bindings: Mapping[str, Any], name: str, config: SimConfig, default: Optional[int] = 0) -> int:
    lane = _num(bindings, name, default)
    if lane != int(lane) or not 0 <= lane < config.lanes:
        raise BindingError(f"binding {name!r}={lane!r} is not a lane of a {config.lanes}-lane road")
    return int(lane)


def _behavior(agent: str, keys: Mapping[str, Any], config: SimConfig) -> Behavior:
    kind = keys.get(f"{agent}.behavior")
    if kind is None:
        if any(k.startswith(f"{agent}.brake.") for k in keys):
            kind = "brake"
        elif any(k.startswith(f"{agent}.cutin.") for k in keys):
            kind = "cut_in"
        else:
            kind = "constant"
    if kind == "constant":
        return ConstantSpeed()
    if kind == "brake":
        b = BrakeAt(
            t=_num(keys, f"{agent}.brake.t", 0.0),
            decel=_num(keys, f"{agent}.brake.decel"),
            hold=_num(keys, f"{agent}.brake.hold", math.inf),
        )
        if b.t < 0 or b.decel < 0 or b.hold < 0:
            raise BindingError(f"{agent}: brake parameters must be nonnegative")
        return b
    if kind == "cut_in":
        c = CutIn(
            t=_num(keys, f"{agent}.cutin.t", 0.0),
            target_lane=_lane(keys, f"{agent}.cutin.target_lane", config, None),
            duration=_num(keys, f"{agent}.cutin.duration", 2.0),
        )
        if c.t < 0 or c.duration <= 0:
            raise BindingError(f"{agent}: cut-in onset must be >= 0 and duration > 0")
        return c
    raise BindingError(f"{agent}.behavior: unknown behavior {kind!r}")


def _overlaps(world_vehicles: Sequence[tuple[str, VehicleState]], length: float) -> tuple[Overlap, ...]:
    found = []
    for i, (id_a, a) in enumerate(world_vehicles):
        for id_b, b in world_vehicles[i + 1 :]:
            if a.lane != b.lane:
                continue
            depth = length - abs(a.s - b.s)
            if depth > 0:
                found.append(Overlap(id_a, id_b, depth))
    return tuple(found)


def build_world(scenario: ConcreteScenario, logical: LogicalScenario, config: SimConfig) -> World:
    """Bind fixed context and variable values to an initial world state."""
    if scenario.logical_id != logical.id:
        raise ScenarioError(
            f"concrete scenario belongs to {scenario.logical_id!r}, not {logical.id!r}"
        )
    if len(scenario.values) != logical.n:
        raise ScenarioError(f"expected {logical.n} values, got {len(scenario.values)}")
    keys = logical.bindings(scenario.values)

    agent_names: list[str] = []
    for name in keys:
        m = _BINDING.match(name)
        if m is None:
            raise BindingError(f"unknown binding {name!r}")
        entity, key = m.groups()
        allowed = _EGO_KEYS if entity == "ego" else _AGENT_KEYS
        if key not in allowed:
            raise BindingError(f"unknown binding {name!r}")
        if entity != "ego" and entity not in agent_names:
            agent_names.append(entity)
    agent_names.sort(key=lambda a: int(a[len("agent") :]))

    ego_v = _num(keys, "ego.v0", 0.0)
    if ego_v < 0:
        raise BindingError("ego.v0 must be nonnegative")
    ego_lane = _lane(keys, "ego.lane0", config)
    ego = VehicleState(_num(keys, "ego.s0", 0.0), config.lane_center(ego_lane), ego_v, 0.0, ego_lane)

    L = config.vehicle_length
    specs = []
    for agent in agent_names:
        gap = _num(keys, f"{agent}.gap0")
        s = ego.s + gap + L if gap >= 0 else ego.s + gap - L
        v = _num(keys, f"{agent}.v0", ego_v + _num(keys, f"{agent}.dv0", 0.0))
        if v < 0:
            raise BindingError(f"{agent}: initial speed must be nonnegative")
        lane = _lane(keys, f"{agent}.lane0", config)
        initial = VehicleState(s, config.lane_center(lane), v, 0.0, lane)
        specs.append(TrafficAgent(agent, initial, _behavior(agent, keys, config)))

    lateral = []
    for spec in specs:
        b = spec.behavior
        if isinstance(b, CutIn):
            lateral.append(abs(config.lane_center(b.target_lane) - spec.initial.d) / b.duration)
        else:
            lateral.append(0.0)

    vehicles = [("ego", ego)] + [(a.id, a.initial) for a in specs]
    return World(
        config=config,
        time=0.0,
        ego=ego,
        agents=tuple(a.initial for a in specs),
        specs=tuple(specs),
        agent_lateral=tuple(lateral),
        validity=WorldValidity(_overlaps(vehicles, L)),
    )


def _neighbors(
    ego: VehicleState, agents: Sequence[VehicleState], specs: Sequence[TrafficAgent], length: float
) -> tuple[Neighbor, ...]:
    out = []
    for spec, st in zip(specs, agents):
        ds = st.s - ego.s
        ahead = ds > 0
        out.append(Neighbor(spec.id, ds - length if ahead else ds + length, st.v - ego.v, st.lane, st.v, ahead))
    return tuple(out)


def observe(world: World) -> Observation:
    return Observation(
        world.ego,
        _neighbors(world.ego, world.agents, world.specs, world.config.vehicle_length),
        world.time,
    )


def _toward(x: float, target: float, max_step: float) -> float:
    if abs(target - x) <= max_step:
        return target
    return x + math.copysign(max_step, target - x)


def _stepper(
    cfg: SimConfig, specs: Sequence[TrafficAgent], lateral: Sequence[float]
) -> Callable[
    [float, VehicleState, Sequence[VehicleState], Optional[int], Action],
    tuple[VehicleState, tuple[VehicleState, ...], Optional[int]],
]:
    """Build the one-step transition for a fixed road and agent set."""
    dt = cfg.dt
    a_min, a_max = cfg.a_min, cfg.a_max
    lanes = cfg.lanes
    lat_step = cfg.lateral_speed * dt
    lane_of = cfg.lane_of
    behaviors = [spec.behavior for spec in specs]
    cut_ins = [
        (b.t - 1e-9, cfg.lane_center(b.target_lane), lat * dt) if lat else None
        for b, lat in zip(behaviors, lateral)
    ]
    agent_rules = list(zip(behaviors, cut_ins))

    def advance(t, ego, agents, target, action):
        a = action.a_cmd
        a = a_min if a < a_min else a_max if a > a_max else a
        request = action.lane_request
        if request is not None and 0 <= request < lanes:
            target = request
        d = ego.d
        lane = ego.lane
        if target is not None:
            center = target * cfg.lane_width
            d = _toward(d, center, lat_step)
            lane = lane_of(d)
            if d == center:
                target = None
        v = ego.v + a * dt
        new_ego = VehicleState(ego.s + ego.v * dt, d, v if v > 0.0 else 0.0, a, lane)

        new_agents = []
        for (b, cut), st in zip(agent_rules, agents):
            acc = b.accel(t)
            ad, alane = st.d, st.lane
            if cut is not None and t >= cut[0]:
                ad = _toward(ad, cut[1], cut[2])
                alane = lane_of(ad)
            av = st.v + acc * dt
            new_agents.append(VehicleState(st.s + st.v * dt, ad, av if av > 0.0 else 0.0, acc, alane))
        return new_ego, tuple(new_agents), target

    return advance


def step(world: World, action: Action) -> World:
    """Advance the world by one timestep under the SUT action.

    The ego acceleration is clamped to the capability bounds; positions use
    the speed at the start of the step and speeds never go negative.
    """
    advance = _stepper(world.config, world.specs, world.agent_lateral)
    ego, agents, target = advance(world.time, world.ego, world.agents, world.ego_target, action)
    return replace(
        world, time=world.time + world.config.dt, ego=ego, agents=agents, ego_target=target
    )


@dataclass(frozen=True)
class StateSeries:
    s: np.ndarray
    d: np.ndarray
    v: np.ndarray
    a: np.ndarray
    lane: np.ndarray

    def __len__(self) -> int:
        return len(self.s)

    def __getitem__(self, k: int) -> VehicleState:
        return VehicleState(
            float(self.s[k]), float(self.d[k]), float(self.v[k]), float(self.a[k]), int(self.lane[k])
        )

    @classmethod
    def from_states(cls, states: Sequence[VehicleState]) -> "StateSeries":
        s, d, v, a, lane = (list(col) for col in zip(*states))
        return cls(
            np.array(s, dtype=float), np.array(d, dtype=float), np.array(v, dtype=float),
            np.array(a, dtype=float), np.array(lane, dtype=int),
        )


@dataclass(frozen=True)
class Trace:
    """Everything observed during one closed-loop run.

    ``lane_change_target[k]`` is the target lane of an ego lane change in
    progress at sample ``k``, or -1 when none is active.
    """

    times: np.ndarray
    ego: StateSeries
    agents: dict[str, StateSeries]
    lane_change_target: np.ndarray
    sut_events: list[tuple[float, str]]
    config: SimConfig
    validity: WorldValidity = field(default_factory=WorldValidity)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def lane_change_active(self) -> np.ndarray:
        return self.lane_change_target >= 0

    def to_csv(self, extra: Mapping[str, np.ndarray] | None = None) -> str:
        """One row per sample: time, then s/d/v/a/lane per vehicle, then extras."""
        columns: dict[str, np.ndarray] = {"time": self.times}
        for name, series in [("ego", self.ego), *self.agents.items()]:
            for key in ("s", "d", "v", "a", "lane"):
                columns[f"{name}.{key}"] = getattr(series, key)
        columns.update(extra or {})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in zip(*columns.values()):
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x: Any) -> str:
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    return repr(float(x))


SUT = Callable[[Observation], Action]


def run_closed_loop(
    scenario: ConcreteScenario, logical: LogicalScenario, sut: SUT, config: SimConfig
) -> Trace:
    """Simulate ``scenario`` over the configured horizon.

    The SUT is queried once per step; the result is a pure function of the
    inputs as long as the SUT is deterministic.
    """
    world = build_world(scenario, logical, config)
    n = config.steps
    dt = config.dt
    L = config.vehicle_length
    specs = world.specs
    advance = _stepper(config, specs, world.agent_lateral)

    ego, agents, target = world.ego, world.agents, world.ego_target
    ego_states = [ego]
    agent_states = [agents]
    targets = [-1]
    events: list[tuple[float, str]] = []
    declined = requested = aeb = False

    for k in range(n):
        t = k * dt
        action = sut(Observation(ego, _neighbors(ego, agents, specs, L), t))
        is_request = action.lane_request is not None
        if action.declined and not declined:
            events.append((t, "lane-change-declined"))
        if is_request and not requested:
            events.append((t, "lane-change-requested"))
        if action.aeb and not aeb:
            events.append((t, "aeb-triggered"))
        declined, requested, aeb = action.declined, is_request, action.aeb

        ego, agents, target = advance(t, ego, agents, target, action)
        ego_states.append(ego)
        agent_states.append(agents)
        targets.append(-1 if target is None else target)

    return Trace(
        times=np.arange(n + 1) * dt,
        ego=StateSeries.from_states(ego_states),
        agents={
            spec.id: StateSeries.from_states([row[i] for row in agent_states])
            for i, spec in enumerate(specs)
        },
        lane_change_target=np.array(targets, dtype=int),
        sut_events=events,
        config=config,
        validity=world.validity,
    )
