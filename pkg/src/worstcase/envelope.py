"""Safe operation envelope and normalized margins.

Each active constraint contributes ``(actual - required) / required`` clipped
to [-1, 1]; the instantaneous margin is the minimum over active constraints
and the trace margin is the minimum over time. A negative trace margin means
the ego vehicle left the envelope.

Constraints:

* ``front``: bumper gap to the lead vehicle in the ego lane must be at least
  ``d0 + tau * v_ego``.
* ``ttc``: time-to-collision to that lead, capped at ``ttc_cap``, must be at
  least ``ttc_min``.
* ``rear``: during an ego lane change, the gap to the nearest follower in the
  target lane must be at least ``rear_d0 + rear_tau * v_follower``.
* ``road``: lateral clearance between the ego body and the road edge must be
  at least ``road_clearance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, NamedTuple, Optional

import numpy as np

from .core import Neighbor, VehicleState
from .simulation import Trace

CONSTRAINTS = ("front", "ttc", "rear", "road")


@dataclass(frozen=True)
class EnvelopeSpec:
    tau: float = 0.9
    d0: float = 1.5
    rear_tau: float = 0.5
    rear_d0: float = 1.0
    ttc_min: float = 1.5
    ttc_cap: float = 10.0
    road_clearance: float = 0.2

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"envelope parameter {f.name} must be positive and finite")
        if self.ttc_cap <= self.ttc_min:
            raise ValueError("ttc_cap must exceed ttc_min")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EnvelopeSpec":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown envelope keys: {sorted(unknown)}")
        return cls(**data)


class Road(NamedTuple):
    lanes: int
    lane_width: float
    vehicle_width: float


class Snapshot(NamedTuple):
    """State at one instant, as needed to evaluate the envelope."""

    ego: VehicleState
    neighbors: tuple[Neighbor, ...]
    lane_change_target: Optional[int] = None
    road: Optional[Road] = None


def ttc(gap: float, closing_speed: float) -> float:
    if gap < 0:
        return 0.0
    if closing_speed > 0:
        return gap / closing_speed
    return math.inf


def _clip(x: float) -> float:
    return min(1.0, max(-1.0, x))


def _road_clearance(d: float, road: Road) -> float:
    half = road.vehicle_width / 2
    left_edge = -road.lane_width / 2
    right_edge = (road.lanes - 0.5) * road.lane_width
    return min(d - half - left_edge, right_edge - (d + half))


def constraint_margins(snap: Snapshot, spec: EnvelopeSpec) -> dict[str, float]:
    """Clipped margin of every active constraint."""
    out: dict[str, float] = {}
    ego = snap.ego
    lead = None
    for nb in snap.neighbors:
        if nb.ahead and nb.lane == ego.lane and (lead is None or nb.gap < lead.gap):
            lead = nb
    if lead is not None:
        required = spec.d0 + spec.tau * ego.v
        out["front"] = _clip((lead.gap - required) / required)
        t = min(ttc(lead.gap, -lead.dv), spec.ttc_cap)
        out["ttc"] = _clip((t - spec.ttc_min) / spec.ttc_min)
    target = snap.lane_change_target
    if target is not None and target >= 0:
        follower = None
        for nb in snap.neighbors:
            if not nb.ahead and nb.lane == target and (follower is None or nb.gap > follower.gap):
                follower = nb
        if follower is not None:
            required = spec.rear_d0 + spec.rear_tau * follower.v
            out["rear"] = _clip((-follower.gap - required) / required)
    if snap.road is not None:
        clearance = _road_clearance(ego.d, snap.road)
        out["road"] = _clip((clearance - spec.road_clearance) / spec.road_clearance)
    return out


def instantaneous_margin(snap: Snapshot, spec: EnvelopeSpec) -> float:
    margins = constraint_margins(snap, spec)
    return min(margins.values()) if margins else 1.0


@dataclass(frozen=True)
class MarginReport:
    margins: np.ndarray  # m(t) per sample
    m_star: float
    argmin_index: int
    argmin_time: float
    constraint: Optional[str]  # constraint attaining m_star, None if nothing was active
    per_constraint: dict[str, Optional[float]]  # min over time; None if never active

    @property
    def violated(self) -> bool:
        return self.m_star < 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "m_star": self.m_star,
            "violated": self.violated,
            "argmin_time": self.argmin_time,
            "constraint": self.constraint,
            "per_constraint": self.per_constraint,
        }


def snapshot(trace: Trace, k: int) -> Snapshot:
    """Reconstruct the envelope snapshot at sample ``k`` of a trace."""
    cfg = trace.config
    ego = trace.ego[k]
    L = cfg.vehicle_length
    neighbors = []
    for agent_id, series in trace.agents.items():
        st = series[k]
        ds = st.s - ego.s
        ahead = ds > 0
        neighbors.append(
            Neighbor(agent_id, ds - L if ahead else ds + L, st.v - ego.v, st.lane, st.v, ahead)
        )
    target = int(trace.lane_change_target[k])
    return Snapshot(
        ego, tuple(neighbors), target if target >= 0 else None,
        Road(cfg.lanes, cfg.lane_width, cfg.vehicle_width),
    )


def _nearest(mask: np.ndarray, key: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per column: whether any row is selected, and the row with smallest key."""
    masked = np.where(mask, key, np.inf)
    return mask.any(axis=0), masked.argmin(axis=0)


def trace_margin(trace: Trace, spec: EnvelopeSpec) -> MarginReport:
    cfg = trace.config
    T = len(trace)
    cols = np.arange(T)
    table = np.full((len(CONSTRAINTS), T), np.nan)

    ego = trace.ego
    if trace.agents:
        S = np.stack([a.s for a in trace.agents.values()])
        V = np.stack([a.v for a in trace.agents.values()])
        lane = np.stack([a.lane for a in trace.agents.values()])
        ds = S - ego.s
        ahead = ds > 0

        gap_front = ds - cfg.vehicle_length
        has_lead, idx = _nearest(ahead & (lane == ego.lane), gap_front)
        lead_gap = gap_front[idx, cols]
        lead_v = V[idx, cols]
        required = spec.d0 + spec.tau * ego.v
        front = np.clip((lead_gap - required) / required, -1.0, 1.0)
        closing = ego.v - lead_v
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(lead_gap < 0, 0.0, np.where(closing > 0, lead_gap / closing, np.inf))
        t = np.minimum(t, spec.ttc_cap)
        ttc_m = np.clip((t - spec.ttc_min) / spec.ttc_min, -1.0, 1.0)
        table[0] = np.where(has_lead, front, np.nan)
        table[1] = np.where(has_lead, ttc_m, np.nan)

        target = trace.lane_change_target
        gap_rear = -(ds + cfg.vehicle_length)
        has_f, idx = _nearest(~ahead & (lane == target) & (target >= 0), gap_rear)
        required = spec.rear_d0 + spec.rear_tau * V[idx, cols]
        rear = np.clip((gap_rear[idx, cols] - required) / required, -1.0, 1.0)
        table[2] = np.where(has_f, rear, np.nan)

    half = cfg.vehicle_width / 2
    clearance = np.minimum(
        ego.d - half - (-cfg.lane_width / 2), (cfg.lanes - 0.5) * cfg.lane_width - (ego.d + half)
    )
    table[3] = np.clip((clearance - spec.road_clearance) / spec.road_clearance, -1.0, 1.0)

    filled = np.where(np.isnan(table), np.inf, table)
    margins = filled.min(axis=0)
    margins = np.where(np.isinf(margins), 1.0, margins)
    k = int(margins.argmin())
    active = ~np.isnan(table[:, k])
    constraint = None
    if active.any():
        constraint = CONSTRAINTS[int(np.argmin(np.where(active, table[:, k], np.inf)))]
    per_constraint = {
        name: (float(np.nanmin(row)) if not np.isnan(row).all() else None)
        for name, row in zip(CONSTRAINTS, table)
    }
    return MarginReport(
        margins=margins,
        m_star=float(margins[k]),
        argmin_index=k,
        argmin_time=float(trace.times[k]),
        constraint=constraint,
        per_constraint=per_constraint,
    )
