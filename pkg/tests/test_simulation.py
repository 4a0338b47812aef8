import json
import os

import numpy as np
import pytest

from conftest import agent, aloha, mac_spec, tcp_spec, tdma
from cplab.errors import (InvalidSpecError, MissingArtifactError,
                          MissingDecisionError, OverrideOutOfRangeError)
from cplab.oracle import Population, expected_throughputs
from cplab.simulation import (FlowConfig, NodeConfig, ScenarioSpec,
                              TcpScenarioSpec, get_world, parse_scenario,
                              parse_scenario_from_file)
from cplab.simulation.flow import (CONGESTION_AVOIDANCE, SLOW_START,
                                   FlowState, REWARD_FLOOR_PENALTY,
                                   reno_update, tcp_reward, vegas_update)
from cplab.simulation.mac_world import silent_policy, vector_policy
from cplab.simulation.tcp_world import fixed_cwnd_policy
from cplab.simulation.trajectory import RoundFeedback
from cplab.metrics import flow_throughputs, jain_index


def _mac_doc(nodes, **extra):
    doc = {'version': 'mac-v1', 'total_frames': 10, 'nodes': nodes}
    doc.update(extra)
    return doc


class TestScenarioFiles:

    def test_presets_parse(self, scenario_dir):
        for name in sorted(os.listdir(scenario_dir)):
            spec = parse_scenario_from_file(os.path.join(scenario_dir, name))
            assert spec.name == os.path.splitext(name)[0]

    def test_1t_1h_preset(self, scenario_dir):
        spec = parse_scenario_from_file(os.path.join(scenario_dir,
                                                     '1t-1h.json'))
        assert spec.family == 'mac'
        assert spec.describe() == 'T{3,5}+H'
        assert spec.agent_ids == (1,)
        assert spec.total_frames == 10000

    def test_dynamic_preset_segments(self, scenario_dir):
        spec = parse_scenario_from_file(os.path.join(scenario_dir,
                                                     'dynamic.json'))
        assert spec.event_frames() == [2500, 5000, 7500]
        live = [seg.live_ids for seg in spec.segments()]
        assert live == [(0, 1, 2), (0, 2), (0, 2, 3, 4), (0, 2, 3, 4, 5)]

    def test_tcp_preset(self, scenario_dir):
        spec = parse_scenario_from_file(os.path.join(scenario_dir,
                                                     'agent-vegas.json'))
        assert spec.family == 'tcp'
        assert spec.agent_ids == (0,)
        assert spec.pipe == pytest.approx(12.5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingArtifactError) as e:
            parse_scenario_from_file(str(tmp_path / 'nope.json'))
        assert 'nope.json' in str(e.value)
        assert e.value.exit_code == 2

    def test_bad_json_names_position(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"version": "mac-v1",\n "nodes": [}')
        with pytest.raises(InvalidSpecError) as e:
            parse_scenario_from_file(str(path))
        assert 'line 2' in str(e.value)

    def test_unknown_version(self):
        with pytest.raises(InvalidSpecError) as e:
            parse_scenario({'version': 'mac-v9', 'nodes': []})
        assert e.value.field_path == 'version'

    def test_aloha_q_out_of_range(self):
        with pytest.raises(InvalidSpecError) as e:
            parse_scenario(_mac_doc([{'kind': 'aloha', 'q': 1.5}]))
        assert e.value.field_path == 'nodes[0].q'

    def test_tdma_slot_outside_frame(self):
        with pytest.raises(InvalidSpecError) as e:
            parse_scenario(_mac_doc([{'kind': 'tdma', 'slots': [12]}]))
        assert e.value.field_path == 'nodes[0].slots'

    def test_unknown_field(self):
        with pytest.raises(InvalidSpecError) as e:
            parse_scenario(_mac_doc([{'kind': 'aloha', 'q': 0.2, 'rate': 1}]))
        assert e.value.field_path == 'nodes[0].rate'

    def test_duplicate_ids(self):
        with pytest.raises(InvalidSpecError) as e:
            ScenarioSpec((aloha(0), agent(0)), 10)
        assert 'duplicate' in str(e.value)

    def test_backoff_defaults_filled(self):
        spec = parse_scenario(_mac_doc([{'kind': 'csma'}, {'kind': 'agent'}]))
        assert spec.nodes[0].window == 2
        assert spec.nodes[0].max_stage == 4

    def test_document_round_trip(self):
        spec = mac_spec(tdma(0), aloha(1, leave_frame=5), agent(2),
                        frames=10, seed=3, name='mix')
        again = parse_scenario(json.loads(json.dumps(spec.to_dict())))
        assert again == spec


class TestMacWorld:

    def test_tdma_alone(self):
        world = get_world(mac_spec(tdma(0), frames=10))
        log = world.run_frames(silent_policy, 10)
        assert np.allclose(log.outcome_rates(), [0.2, 0.0, 0.8])
        assert world.done

    def test_agent_collides_with_tdma(self):
        world = get_world(mac_spec(tdma(0), agent(1), frames=20))
        log = world.run_frames(vector_policy({1: np.ones(10)}), 20)
        assert np.allclose(log.outcome_rates(), [0.8, 0.2, 0.0])
        successes = log.frame_successes((0, 1)).sum(axis=0)
        assert successes.tolist() == [0, 160]

    def test_restart_replays_the_run(self):
        world = get_world(mac_spec(aloha(0), agent(1), frames=50))
        policy = vector_policy({1: np.full(10, 0.3)})
        first = [s.outcome for s in world.run_frames(policy, 50).slots]
        world.restart()
        assert not world.done
        second = [s.outcome for s in world.run_frames(policy, 50).slots]
        assert first == second

    def test_missing_agent_decision(self):
        world = get_world(mac_spec(agent(0), frames=10))
        with pytest.raises(MissingDecisionError):
            world.step_slot({})

    def test_csma_alone_transmits_every_slot(self):
        world = get_world(mac_spec(NodeConfig(0, 'csma', window=2,
                                              max_stage=4), frames=10))
        log = world.run_frames(silent_policy, 10)
        assert np.allclose(log.outcome_rates(), [1.0, 0.0, 0.0])

    def test_csma_defers_to_tdma(self):
        spec = mac_spec(tdma(0), NodeConfig(1, 'csma', window=2, max_stage=4),
                        frames=50)
        log = get_world(spec).run_frames(silent_policy, 50)
        rates = log.frame_successes((0, 1)).sum(axis=0) / len(log)
        assert rates.tolist() == pytest.approx([0.2, 0.8])
        assert log.outcome_rates()[1] == 0.0

    def test_same_seed_same_trace(self, seed):
        spec = mac_spec(aloha(0), aloha(1), agent(2), frames=50, seed=seed)
        policy = vector_policy({2: np.full(10, 0.3)})
        a = get_world(spec).run_frames(policy, 50)
        b = get_world(spec).run_frames(policy, 50)
        assert [s.transmitters for s in a.slots] == \
            [s.transmitters for s in b.slots]
        c = get_world(spec.with_seed(seed + 1)).run_frames(policy, 50)
        assert [s.transmitters for s in a.slots] != \
            [s.transmitters for s in c.slots]

    def test_population_events(self):
        spec = mac_spec(aloha(0), aloha(1, leave_frame=5), agent(2),
                        aloha(3, join_frame=8), frames=10)
        world = get_world(spec)
        log = world.run_frames(vector_policy({2: np.zeros(10)}), 10)
        assert log.events == [(0, (0, 1, 2)), (5, (0, 2)), (8, (0, 2, 3))]
        assert log.slots[49].live_ids == (0, 1, 2)
        assert log.slots[50].live_ids == (0, 2)
        assert all(1 not in s.transmitters for s in log.slots[50:])

    def test_tail_keeps_records_in_window(self):
        world = get_world(mac_spec(aloha(0), agent(1), frames=30))
        log = world.run_frames(vector_policy({1: np.full(10, 0.5)}), 30)
        tail = log.tail(10)
        assert tail.n_frames == 10
        assert tail.first_frame == 20
        assert len(tail.records) == 100
        assert tail.records[0].slot_index == 200

    def test_expected_throughputs_match_simulation(self):
        """Closed form vs 10^5 simulated slots on random populations."""
        rng = np.random.default_rng(2024)
        n_frames = 10000
        for trial in range(5):
            nodes = []
            for _ in range(int(rng.integers(1, 3))):
                nodes.append(aloha(len(nodes),
                                   q=round(float(rng.uniform(0.05, 0.4)), 3)))
            if trial % 2 == 0:
                slots = rng.choice(10, size=int(rng.integers(1, 4)),
                                   replace=False)
                nodes.append(tdma(len(nodes), slots=[int(s) for s in slots]))
            aid = len(nodes)
            nodes.append(agent(aid))
            p = np.round(rng.uniform(0.0, 1.0, 10), 3)
            spec = mac_spec(*nodes, frames=n_frames, seed=trial)

            log = get_world(spec).run_frames(vector_policy({aid: p}),
                                             n_frames)
            ids = log.node_ids()
            measured = log.frame_successes(ids).sum(axis=0) / len(log)
            expected = expected_throughputs({aid: p},
                                            Population.from_scenario(spec))
            for nid, m in zip(ids, measured):
                x = expected[nid]
                sigma = np.sqrt(x * (1 - x) / len(log))
                assert abs(m - x) <= 3 * sigma + 1e-9, (trial, nid, m, x)


class TestTcp:

    def test_reno_slow_start_and_loss(self):
        fb = RoundFeedback(acks=4, rtt=0.1, loss=False, drops=0, reward=0)
        s = reno_update(FlowState(cwnd=4, ssthresh=64), fb)
        assert s.cwnd == 8 and s.mode == SLOW_START
        lossy = fb._replace(loss=True)
        s = reno_update(FlowState(cwnd=20, ssthresh=64), lossy)
        assert s.cwnd == 10 and s.mode == CONGESTION_AVOIDANCE
        s = reno_update(FlowState(cwnd=3, ssthresh=64), lossy)
        assert s.cwnd == 2

    def test_reno_additive_increase(self):
        fb = RoundFeedback(acks=10, rtt=0.1, loss=False, drops=0, reward=0)
        s = reno_update(FlowState(10, 10, mode=CONGESTION_AVOIDANCE), fb)
        assert s.cwnd == 11

    def test_vegas_thresholds(self):
        fb = RoundFeedback(acks=10, rtt=0.1, loss=False, drops=0, reward=0)
        assert vegas_update(FlowState(10, 64, 0.1), fb).cwnd == 11
        # 10 * (1 - 0.1 / 0.2) = 5 packets queued
        fb = fb._replace(rtt=0.2)
        assert vegas_update(FlowState(10, 64, 0.1), fb).cwnd == 9
        # 4 * 0.5 = 2 packets queued
        assert vegas_update(FlowState(4, 64, 0.1), fb).cwnd == 4

    def test_reward_floor(self):
        assert tcp_reward(0, 0.2) == pytest.approx(
            -0.1 - REWARD_FLOOR_PENALTY)
        assert tcp_reward(np.e, 0.2, beta=1.0) == pytest.approx(0.8)

    def test_override_bounds(self):
        world = get_world(tcp_spec('agent', 'reno', rounds=10))
        with pytest.raises(OverrideOutOfRangeError):
            world.step_round({0: 100})
        with pytest.raises(OverrideOutOfRangeError):
            world.step_round({1: 4})
        feedback = world.step_round({0: 4})
        assert feedback[0].acks == 4

    def test_queue_and_drops(self):
        world = get_world(tcp_spec('agent', 'agent', rounds=10))
        # pipe 12.5 + buffer 12.5 packets
        fb = world.step_round({0: 20, 1: 20})
        assert fb[0].loss and fb[0].drops == pytest.approx(7.5)
        assert fb[0].rtt == pytest.approx(0.2)
        fb = world.step_round({0: 5, 1: 5})
        assert not fb[0].loss and fb[0].rtt == pytest.approx(0.1)

    def test_flow_schedule(self):
        spec = TcpScenarioSpec((FlowConfig(0, 'reno'),
                                FlowConfig(1, 'vegas', start_round=10)), 20)
        log = get_world(spec).run_rounds(fixed_cwnd_policy({}), 20)
        assert {r.flow_id for r in log.records if r.round_index < 10} == {0}
        assert {r.flow_id for r in log.records if r.round_index >= 10} == \
            {0, 1}

    @pytest.mark.parametrize('controllers', [('reno', 'reno'),
                                             ('vegas', 'vegas')])
    def test_homogeneous_flows_are_fair(self, controllers):
        log = get_world(tcp_spec(*controllers, rounds=2000)).run_rounds(
            fixed_cwnd_policy({}), 2000)
        kbps = flow_throughputs(log, 1000)
        assert jain_index(list(kbps.values())) >= 0.99

    def test_reno_starves_vegas(self):
        log = get_world(tcp_spec('reno', 'vegas', rounds=2000)).run_rounds(
            fixed_cwnd_policy({}), 2000)
        kbps = flow_throughputs(log, 1000)
        assert kbps[0] > kbps[1]
        assert jain_index(list(kbps.values())) <= 0.90
