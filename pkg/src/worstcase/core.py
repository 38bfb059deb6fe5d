"""Value types shared by the simulator and the systems under test."""

from __future__ import annotations

from typing import NamedTuple, Optional


class VehicleState(NamedTuple):
    s: float  # longitudinal position of the vehicle center, m
    d: float  # lateral position, m; 0 is the center of lane 0
    v: float  # longitudinal speed, m/s
    a: float  # longitudinal acceleration, m/s^2
    lane: int


class Neighbor(NamedTuple):
    """Another vehicle as seen from the ego vehicle.

    ``gap`` is bumper-to-bumper and signed: positive for a vehicle ahead,
    negative for one behind. ``ahead`` is decided by the vehicle centers, so
    an overlapping vehicle ahead has ``ahead=True`` and a negative gap.
    """

    id: str
    gap: float
    dv: float  # neighbor speed minus ego speed
    lane: int
    v: float
    ahead: bool


class Observation(NamedTuple):
    ego: VehicleState
    neighbors: tuple[Neighbor, ...]
    time: float


class Action(NamedTuple):
    a_cmd: float
    lane_request: Optional[int] = None
    declined: bool = False  # a lane-change opportunity was evaluated and rejected
    aeb: bool = False
