
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worstcase.core import Action
from worstcase.scenario import instantiate
from worstcase.simulation import (
    BindingError,
    BrakeAt,
    ConstantSpeed,
    CutIn,
    SimConfig,
    build_world,
    observe,
    run_closed_loop,
    step,
)
from worstcase.sut import make_sut

from conftest import logical

CFG = SimConfig()


def zero_action(obs):
    return Action(0.0)


def world_of(variables, fixed=None, values=None, config=CFG):
    s = logical(variables, fixed)
    vals = values if values is not None else [lo for lo, _ in variables.values()]
    return s, build_world(instantiate(s, vals), s, config)


FOLLOW = logical(
    {"ego.v0": (15, 35), "agent1.gap0": (10, 60), "agent1.brake.decel": (2, 9)},
    fixed={"agent1.behavior": "brake", "agent1.brake.t": 1.0},
)


class TestSimConfig:
    def test_defaults_give_1001_samples(self):
        assert CFG.steps == 1000

    @pytest.mark.parametrize("kw", [{"dt": 0}, {"horizon": 0.001}, {"lanes": 0}, {"a_min": 1.0}])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValueError, match="unknown"):
            SimConfig.from_dict({"dtt": 0.1})

    def test_lane_of(self):
        assert [CFG.lane_of(d) for d in (-1.0, 0.0, 1.7, 1.8, 3.5, 99.0)] == [0, 0, 0, 1, 1, 1]


class TestBuildWorld:
    def test_ego_speed_binding(self):
        _, w = world_of({"ego.v0": (20, 30)})
        assert w.ego.v == 20.0 and w.ego.s == 0.0 and w.ego.lane == 0

    def test_gap_is_bumper_to_bumper(self):
        _, w = world_of({"agent1.gap0": (30, 40)}, fixed={"ego.v0": 20})
        assert w.agents[0].s == pytest.approx(w.ego.s + 30 + CFG.vehicle_length)
        assert observe(w).neighbors[0].gap == pytest.approx(30.0)

    def test_negative_gap_places_agent_behind(self):
        _, w = world_of({"agent1.gap0": (-20, -10)}, fixed={"ego.v0": 20})
        nb = observe(w).neighbors[0]
        assert not nb.ahead and nb.gap == pytest.approx(-20.0)

    def test_misspelled_binding(self):
        s = logical({"ego.vel0": (0, 1)})
        with pytest.raises(BindingError, match="ego.vel0"):
            build_world(instantiate(s, [0.5]), s, CFG)

    @pytest.mark.parametrize("name", ["car1.v0", "agent1.speed", "agent.gap0"])
    def test_unknown_bindings(self, name):
        s = logical({name: (0, 1)})
        with pytest.raises(BindingError):
            build_world(instantiate(s, [0.5]), s, CFG)

    def test_dv0_relative_to_ego(self):
        _, w = world_of({"agent1.dv0": (-5, 0)}, fixed={"ego.v0": 20, "agent1.gap0": 30})
        assert w.agents[0].v == 15.0

    def test_behavior_inferred_and_explicit(self):
        _, w = world_of({"agent1.brake.decel": (4, 5)}, fixed={"agent1.gap0": 30})
        assert w.specs[0].behavior == BrakeAt(0.0, 4.0)
        _, w = world_of({"agent1.gap0": (30, 31)}, fixed={"agent1.behavior": "cut_in",
                                                           "agent1.lane0": 1, "agent1.cutin.target_lane": 0})
        assert w.specs[0].behavior == CutIn(0.0, 0, 2.0)
        _, w = world_of({"agent1.gap0": (30, 31)})
        assert w.specs[0].behavior == ConstantSpeed()

    def test_bad_lane(self):
        s = logical({"agent1.gap0": (30, 31)}, fixed={"agent1.lane0": 2})
        with pytest.raises(BindingError, match="lane"):
            build_world(instantiate(s, [30]), s, CFG)

    def test_overlap_flagged_not_raised(self):
        _, w = world_of({"agent1.gap0": (-2, 0)}, fixed={"ego.v0": 20}, values=[-2.0])
        assert w.validity.ok  # 2 m of clearance behind the ego vehicle
        s = logical({"agent1.v0": (0, 1)}, fixed={"agent1.gap0": 0.0})
        w = build_world(instantiate(s, [0.0]), s, CFG)
        assert w.validity.ok  # touching, not overlapping
        s = logical({"agent1.v0": (0, 1), "agent2.gap0": (-10, 10)}, fixed={"agent1.gap0": 10})
        w = build_world(instantiate(s, [0.0, 8.0]), s, CFG)
        # agent2 sits 2 m behind agent1's rear bumper: 4.5 - 2 = 2.5 m overlap
        assert [o.depth for o in w.validity.overlaps] == [pytest.approx(2.5)]
        assert w.validity.overlap_depth == pytest.approx(2.5)

    def test_wrong_logical(self):
        s = logical({"ego.v0": (0, 1)})
        other = logical({"ego.v0": (0, 1)}, id="other")
        with pytest.raises(Exception, match="belongs to"):
            build_world(instantiate(other, [0.5]), s, CFG)


class TestStep:
    def test_euler_update(self):
        _, w = world_of({"ego.v0": (10, 20)})
        w2 = step(w, Action(0.0))
        assert w2.ego.s == pytest.approx(0.1, abs=1e-12)
        assert w2.ego.v == 10.0
        assert w2.time == pytest.approx(0.01)

    def test_capability_clamp(self):
        cfg = SimConfig(a_min=-9.0)
        _, w = world_of({"ego.v0": (10, 20)}, config=cfg)
        w2 = step(w, Action(-20.0))
        assert w2.ego.a == -9.0
        assert w2.ego.v == pytest.approx(10 - 0.09)
        assert step(w, Action(50.0)).ego.a == cfg.a_max

    def test_brake_to_standstill_stays_zero(self):
        s, w = world_of({"agent1.v0": (10, 11)},
                        fixed={"agent1.gap0": 50, "agent1.brake.decel": 5, "agent1.brake.t": 0, "ego.v0": 0})
        for _ in range(200):
            w = step(w, Action(0.0))
        assert w.agents[0].v == pytest.approx(0.0, abs=1e-9)
        for _ in range(100):
            w = step(w, Action(0.0))
        assert w.agents[0].v == 0.0

    def test_brake_hold_releases(self):
        s, w = world_of({"agent1.v0": (20, 21)},
                        fixed={"agent1.gap0": 50, "agent1.brake.decel": 5, "agent1.brake.hold": 1.0})
        for _ in range(300):
            w = step(w, Action(0.0))
        assert w.agents[0].v == pytest.approx(15.0)

    def test_lane_change_moves_at_lateral_speed(self):
        _, w = world_of({"ego.v0": (20, 21)})
        w = step(w, Action(0.0, lane_request=1))
        assert w.lane_change_active and w.ego.d == pytest.approx(0.015)
        for _ in range(300):
            w = step(w, Action(0.0))
        assert w.ego.d == CFG.lane_width and w.ego.lane == 1 and not w.lane_change_active

    def test_request_outside_road_ignored(self):
        _, w = world_of({"ego.v0": (20, 21)})
        assert not step(w, Action(0.0, lane_request=5)).lane_change_active

    def test_step_matches_closed_loop(self):
        s = FOLLOW
        c = instantiate(s, [25, 20, 8])
        sut = make_sut("acc_reference")
        trace = run_closed_loop(c, s, sut, CFG)
        w = build_world(c, s, CFG)
        for k in range(1, len(trace)):
            w = step(w, sut(observe(w)))
            assert w.ego == trace.ego[k]
            assert w.agents[0] == trace.agents["agent1"][k]


class TestClosedLoop:
    def test_length_and_times(self):
        trace = run_closed_loop(instantiate(FOLLOW, [20, 30, 5]), FOLLOW, zero_action, CFG)
        assert len(trace) == 1001 == len(trace.ego) == len(trace.agents["agent1"])
        assert np.allclose(np.diff(trace.times), CFG.dt, rtol=0, atol=1e-12)

    def test_deterministic(self):
        c = instantiate(FOLLOW, [27.3, 18.1, 7.7])
        a = run_closed_loop(c, FOLLOW, make_sut("acc_reference"), CFG)
        b = run_closed_loop(c, FOLLOW, make_sut("acc_reference"), CFG)
        assert a.to_csv() == b.to_csv()
        assert a.sut_events == b.sut_events

    def test_constant_gap_with_matched_speeds(self):
        s = logical({"agent1.gap0": (10, 60)}, fixed={"ego.v0": 20, "agent1.v0": 20})
        trace = run_closed_loop(instantiate(s, [30]), s, zero_action, CFG)
        gap = trace.agents["agent1"].s - trace.ego.s - CFG.vehicle_length
        np.testing.assert_allclose(gap, 30.0, atol=1e-9)

    def test_aeb_event_recorded(self):
        trace = run_closed_loop(instantiate(FOLLOW, [35, 10, 9]), FOLLOW, make_sut("acc_reference"), CFG)
        assert "aeb-triggered" in [e for _, e in trace.sut_events]

    def test_cut_in_changes_lane(self):
        s = logical({"agent1.gap0": (10, 40)},
                    fixed={"ego.v0": 20, "agent1.lane0": 1, "agent1.behavior": "cut_in",
                           "agent1.cutin.t": 1.0, "agent1.cutin.target_lane": 0, "agent1.cutin.duration": 2.0})
        trace = run_closed_loop(instantiate(s, [20]), s, zero_action, CFG)
        agent = trace.agents["agent1"]
        assert agent.lane[0] == 1 and agent.lane[-1] == 0
        assert agent.d[300] == pytest.approx(0.0, abs=1e-9)  # 2 s after onset
        assert agent.d[200] == pytest.approx(CFG.lane_width / 2, abs=0.02)

    def test_csv_columns(self):
        trace = run_closed_loop(instantiate(FOLLOW, [20, 30, 5]), FOLLOW, zero_action, CFG)
        header = trace.to_csv({"x": np.zeros(len(trace))}).splitlines()[0]
        assert header == ("time,ego.s,ego.d,ego.v,ego.a,ego.lane,"
                          "agent1.s,agent1.d,agent1.v,agent1.a,agent1.lane,x")


scenario_values = st.tuples(st.floats(15, 35), st.floats(10, 60), st.floats(2, 9))


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(scenario_values, st.sampled_from(["acc_reference", "acc_flawed"]))
    def test_kinematic_invariants(self, values, sut_name):
        trace = run_closed_loop(instantiate(FOLLOW, values), FOLLOW, make_sut(sut_name), CFG)
        for series in (trace.ego, trace.agents["agent1"]):
            assert np.max(np.abs(series.s[1:] - (series.s[:-1] + series.v[:-1] * CFG.dt))) <= 1e-9
            assert series.v.min() >= 0
        assert trace.ego.a.min() >= CFG.a_min and trace.ego.a.max() <= CFG.a_max

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 35), st.floats(0, 35), st.floats(-50, 80))
    def test_constant_speed_agents_conserve_speed(self, v_ego, v_agent, gap):
        s = logical({"agent1.v0": (0, 35)}, fixed={"ego.v0": v_ego, "agent1.gap0": gap, "agent1.lane0": 1})
        trace = run_closed_loop(instantiate(s, [v_agent]), s, make_sut("acc_reference"), CFG)
        v = trace.agents["agent1"].v
        assert np.max(np.abs(v - v[0])) <= 1e-12
