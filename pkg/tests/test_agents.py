import numpy as np
import pytest

from conftest import agent, aloha, mac_spec, tcp_spec, tdma
from cplab.agents import (MacAgentAPI, StrategySet, TcpAgentAPI,
                          evaluate_strategy, generate_demos, get_api,
                          psa_update)
from cplab.agents.assistant import ProgrammingAssistant, asi_materialize
from cplab.agents.node_agent import NodeAgent
from cplab.agents.observer import (ObserverAgent, action_converged,
                                   observer_analyze)
from cplab.config import AgentConfig
from cplab.errors import (BackendUnavailableError, DomainMismatchError,
                          MaterializationExhaustedError, PreconditionError,
                          TracingDisabledError, WindowTooShortError)
from cplab.llm import Backend, CompletionRequest
from cplab.simulation import get_world
from cplab.simulation.mac_world import silent_policy
from cplab.simulation.node import derive_seed
from cplab.strategy import (ActionContext, Effect, Rule, Strategy, Trigger,
                            serialize_strategy, uniform_strategy)

AVOID = Rule(Trigger('slot_utilization', 0.9, (3, 5)),
             Effect('avoid_slots', slots=(3, 5)))


class ReplyBackend(Backend):
    """Plays back a list of replies, repeating the last one."""

    name = 'replies'

    def __init__(self, *replies):
        super().__init__()
        self.replies = list(replies)
        self.requests = []

    def _complete(self, request):
        self.requests.append(request)
        index = min(len(self.requests), len(self.replies)) - 1
        return self.replies[index]


class DownBackend(Backend):

    name = 'down'

    def _complete(self, request):
        raise BackendUnavailableError('connection refused', status=503)


def tdma_log(frames=100):
    world = get_world(mac_spec(tdma(0), agent(1), frames=frames))
    return world.run_frames(silent_policy, frames)


class TestStrategySet:

    def test_replay_matches_live_set(self, seed):
        rng = np.random.default_rng(seed)
        pool = [uniform_strategy(round(x, 2)) for x in np.linspace(0, 1, 8)]
        for _ in range(1000):
            pset = StrategySet()
            for _ in range(int(rng.integers(1, 12))):
                s = pool[int(rng.integers(len(pool)))]
                if s.id in pset and rng.random() < 0.5:
                    pset.remove(s.id, 'random removal')
                else:
                    pset.add(s)
            replayed = StrategySet.replay(pset.history, pset.bodies)
            assert replayed.ids == pset.ids
            assert replayed.history == pset.history

    def test_duplicate_is_recorded_noop(self):
        pset = StrategySet()
        s = uniform_strategy(0.5)
        assert pset.add(s)
        assert not pset.add(s)
        assert pset.ids == [s.id]
        last = pset.history[-1]
        assert (last.op, last.reason) == ('skip', 'duplicate of ' + s.id)

    def test_remove_unknown(self):
        with pytest.raises(KeyError):
            StrategySet().remove('feedbeef', 'gone')

    def test_new_base_action_obsoletes_old(self, scripted):
        old, new = uniform_strategy(0.5), uniform_strategy(0.3)
        pset = psa_update(StrategySet(), old, scripted)
        psa_update(pset, new, scripted)
        assert pset.ids == [new.id]
        assert pset.history[-1].reason == 'obsoleted by ' + new.id

    def test_same_behavior_is_redundant(self, scripted):
        old = uniform_strategy(0.5)
        twin = old.replace(provenance='refined')
        pset = psa_update(StrategySet(), old, scripted)
        psa_update(pset, twin, scripted)
        assert pset.ids == [old.id]
        assert pset.history[-1].op == 'skip'
        assert pset.history[-1].reason.startswith('redundant')

    def test_added_rule_keeps_both(self, scripted):
        plain = uniform_strategy(0.5)
        avoiding = uniform_strategy(0.5, rules=(AVOID,))
        pset = psa_update(StrategySet(), plain, scripted)
        psa_update(pset, avoiding, scripted)
        assert pset.ids == [plain.id, avoiding.id]

    def test_unreadable_verdict(self):
        pset = psa_update(StrategySet(), uniform_strategy(0.5),
                          ReplyBackend('no idea'))
        psa_update(pset, uniform_strategy(0.3), ReplyBackend('no idea'))
        assert len(pset) == 2


class TestAssistant:

    def _request(self):
        return CompletionRequest((('user', 'write a strategy'),))

    def test_one_retry_after_malformed_reply(self):
        valid = serialize_strategy(uniform_strategy(0.4))
        backend = ReplyBackend(valid)
        assistant = ProgrammingAssistant(backend, 'MAC')
        s, retries = assistant.materialize('{"schema": "strat', self._request())
        assert retries == 1
        assert s == uniform_strategy(0.4)
        follow = backend.requests[0]
        assert follow.request_tag == 'asi-retry'
        assert [r for r, _ in follow.messages] == ['user', 'assistant', 'user']
        assert 'syntax' in follow.messages[-1][1]

    def test_validation_errors_are_fed_back(self):
        bad = serialize_strategy(Strategy('MAC', (1.4,) + (0.5,) * 9))
        good = serialize_strategy(uniform_strategy(0.5))
        backend = ReplyBackend(good)
        s, retries = ProgrammingAssistant(backend, 'MAC').materialize(
            bad, self._request())
        assert retries == 1
        assert 'base_action.0' in backend.requests[0].messages[-1][1]

    def test_exhausted(self):
        backend = ReplyBackend('still not json')
        assistant = ProgrammingAssistant(backend, 'MAC', max_retries=3)
        with pytest.raises(MaterializationExhaustedError) as e:
            assistant.materialize('nope', self._request())
        assert len(e.value.bundles) == 3
        assert len(backend.requests) == 2
        assert e.value.exit_code == 3

    def test_wrong_domain_is_invalid(self):
        text = serialize_strategy(Strategy('TCP', 8))
        with pytest.raises(MaterializationExhaustedError):
            asi_materialize(text, ReplyBackend(text), self._request(),
                            ProgrammingAssistant(None, 'MAC').check, 1)

    def test_fenced_reply(self):
        text = 'Here:\n```json\n{}\n```'.format(
            serialize_strategy(uniform_strategy(0.2)))
        s, retries = ProgrammingAssistant(None, 'MAC').materialize(
            text, self._request())
        assert retries == 0 and s.base_action == (0.2,) * 10


class TestObserver:

    def test_action_converged(self):
        a = np.full(10, 0.5)
        assert action_converged([a, a, a, a], 0.02, 3)
        assert not action_converged([a, a, a], 0.02, 3)
        assert not action_converged([a, a, a, a + 0.05], 0.02, 3)
        assert action_converged([8, 8, 8, 8], 0.5, 3)

    def test_window_too_short(self):
        with pytest.raises(WindowTooShortError):
            observer_analyze(tdma_log(50), AgentConfig(), agent_id=1)
        assert ObserverAgent(AgentConfig()).analyze(tdma_log(50), 1) is None

    def test_tdma_slots_reported(self):
        report = observer_analyze(tdma_log(), AgentConfig(), agent_id=1)
        assert report.slots('overused') == [3, 5]
        assert report.slots('unused') == [0, 1, 2, 4, 6, 7, 8, 9]
        assert not report.env_changed
        assert not report.converged
        assert report.window == (0, 100)
        assert report.label() == ('slots 3,5 utilization 1.0; '
                                  'slots 0,1,2,4,6,7,8,9 unused')

    def test_population_change(self):
        spec = mac_spec(aloha(0), aloha(1, join_frame=95), agent(2),
                        frames=100)
        log = get_world(spec).run_frames(silent_policy, 100)
        report = observer_analyze(log, AgentConfig(), agent_id=2)
        assert report.env_changed

    def test_backend_summary(self, scripted):
        observer = ObserverAgent(AgentConfig(), scripted)
        report = observer.analyze(tdma_log(), 1)
        assert report.summary == ('Slots 3,5 overused. '
                                  'Slots 0,1,2,4,6,7,8,9 unused.')

    def test_summary_falls_back_to_label(self):
        report = ObserverAgent(AgentConfig(), DownBackend()).analyze(
            tdma_log(), 1)
        assert report.summary == report.label()


class TestDemos:

    def test_labels_and_size(self, small_config, seed):
        demos = generate_demos('mac', 2, seed, small_config)
        assert [d.label for d in demos] == ['CSMA', 'TDMA', 'ALOHA',
                                            'DYNAMIC']
        assert all(d.k == 2 for d in demos)
        t = demos[1].tuples[0]
        assert len(t.s) == 3 and len(t.s_next) == 3
        assert 0.0 <= t.a <= 1.0

    def test_seeded(self, small_config, seed):
        a = generate_demos('tcp', 2, seed, small_config)
        b = generate_demos('tcp', 2, seed, small_config)
        assert a == b
        assert [d.label for d in a] == ['RENO', 'VEGAS', 'TCP-DYNAMIC']
        assert all(isinstance(t.a, int) and 1 <= t.a <= 64
                   for d in a for t in d.tuples)

    def test_needs_samples(self, small_config):
        with pytest.raises(PreconditionError):
            generate_demos('mac', 0, 0, small_config)

    @pytest.mark.parametrize('family', ['mac', 'tcp'])
    @pytest.mark.parametrize('big', [2 ** 62, 2 ** 64 - 1, -(2 ** 63)])
    def test_extreme_seeds(self, small_config, family, big):
        demos = generate_demos(family, 1, big, small_config)
        assert all(d.k == 1 for d in demos)

    def test_sample_seeds_are_distinct(self):
        seeds = {derive_seed(7, li, i) for li in range(4) for i in range(150)}
        assert len(seeds) == 600
        assert all(0 <= s < 2 ** 64 for s in seeds)
        assert derive_seed(-1, 2, 3) == derive_seed(2 ** 64 - 1, 2, 3)


class TestRunner:

    def test_avoiding_strategy_is_optimal_against_tdma(self, small_config):
        s = uniform_strategy(1.0, rules=(AVOID,))
        j = evaluate_strategy(s, mac_spec(tdma(0), agent(1)), small_config)
        assert j == pytest.approx(np.log(1600.0), abs=1e-9)

    def test_domain_mismatch(self, small_config):
        with pytest.raises(DomainMismatchError):
            evaluate_strategy(Strategy('TCP', 8),
                              mac_spec(tdma(0), agent(1)), small_config)

    def test_seed_wraps_at_64_bits(self, small_config):
        s = uniform_strategy(0.4)
        spec = mac_spec(aloha(0), agent(1))
        top = evaluate_strategy(s, spec, small_config, episodes=2,
                                seed=2 ** 64 - 1)
        assert top == evaluate_strategy(s, spec, small_config, episodes=2,
                                        seed=-1)

    def test_tcp_strategy(self, small_config):
        j1 = evaluate_strategy(Strategy('TCP', 6),
                               tcp_spec('agent', 'vegas'), small_config)
        j2 = evaluate_strategy(Strategy('TCP', 6),
                               tcp_spec('agent', 'vegas'), small_config)
        assert j1 == j2


class TestNodeAgent:

    def _agent(self, backend):
        return NodeAgent(backend, ProgrammingAssistant(backend, 'MAC'),
                         {'family': 'mac', 'frame_len': 10})

    def test_falls_back_to_previous_action(self):
        pset = StrategySet()
        s = uniform_strategy(0.5)
        pset.add(s)
        previous = np.full(10, 0.25)
        d = self._agent(DownBackend()).online_decide(
            pset, s, previous, {}, None, ActionContext())
        assert d.fallback
        assert d.action is previous
        assert '503' in d.reason or 'refused' in d.reason

    def test_first_period_fallback_uses_newest_strategy(self):
        pset = StrategySet()
        pset.add(uniform_strategy(0.5))
        pset.add(uniform_strategy(0.2))
        d = self._agent(DownBackend()).online_decide(
            pset, None, None, {}, None, ActionContext())
        assert d.fallback
        assert np.array_equal(d.action, np.full(10, 0.2))


class TestCPAgent:

    def test_get_api(self):
        assert get_api('mac') is MacAgentAPI
        assert get_api('tcp') is TcpAgentAPI
        with pytest.raises(NotImplementedError):
            get_api('wifi')

    def test_family_mismatch(self, small_config, scripted):
        with pytest.raises(PreconditionError):
            MacAgentAPI(tcp_spec('agent', 'reno'), small_config, scripted)

    def test_offline_learns_a_strategy_set(self, small_config, scripted):
        api = MacAgentAPI(mac_spec(aloha(0), aloha(1), agent(2)),
                          small_config, scripted)
        pset = api.offline()
        assert len(pset) >= 1
        records = api.episodic_memory.records
        assert 1 <= len(records) <= 1 + small_config.n_max
        assert records[0].strategy_id == api.strategy_memory.strategies[0].id
        assert all(s.domain == 'MAC' for s in pset)

    def test_tdma_explained_by_avoidance(self, small_config, scripted):
        api = MacAgentAPI(mac_spec(tdma(0), agent(1), frames=600),
                          small_config, scripted)
        pset = api.offline()
        assert any(r.effect.name == 'avoid_slots'
                   for s in pset for r in s.rules)
        world = api.online()
        assert world.done
        doc, dot = api.export_decision_trace()
        online = [p for p in doc['paths'] if p[0]['stage'] == 'online']
        assert len(online) == 60
        explained = [p for p in online
                     if [s['actor'] for s in p] == ['strategy', 'observer',
                                                    'node', 'action']
                     and p[1]['label'].startswith('slots 3,5 utilization 1.0')
                     and p[2]['label'].endswith(
                         'avoid_slots(3,5) when slot_utilization>=0.9@3,5')]
        assert explained
        assert 'digraph decisions' in dot
        offline = [p for p in doc['paths'] if p[0]['stage'] == 'offline']
        assert offline
        assert [s['actor'] for s in offline[0]] == ['strategy', 'ranker',
                                                    'assistant']

    def test_memory_is_frozen_online(self, small_config, scripted):
        api = MacAgentAPI(mac_spec(tdma(0), agent(1), frames=200),
                          small_config.replace(strategy_enabled=False),
                          scripted)
        api.run()
        with pytest.raises(PreconditionError):
            api.strategy_memory.add(uniform_strategy(0.1))

    def test_fixed_strategy_without_strategy_agent(self, small_config,
                                                   scripted):
        api = MacAgentAPI(mac_spec(aloha(0), aloha(1), agent(2)),
                          small_config.replace(strategy_enabled=False),
                          scripted)
        pset = api.offline()
        assert pset.newest().base_action == (0.3333,) * 10
        assert not api.demos

    def test_backend_outage_online(self, small_config):
        api = MacAgentAPI(mac_spec(tdma(0), agent(1), frames=100),
                          small_config.replace(strategy_enabled=False),
                          DownBackend())
        api.run()
        assert api.fallbacks == 10

    def test_tracing_disabled(self, small_config, scripted):
        api = MacAgentAPI(mac_spec(tdma(0), agent(1), frames=100),
                          small_config.replace(tracing=False), scripted)
        with pytest.raises(TracingDisabledError):
            api.export_decision_trace()

    def test_tcp_offline_without_target(self, small_config, scripted):
        api = TcpAgentAPI(tcp_spec('agent', 'vegas', rounds=200),
                          small_config.replace(n_max=1), scripted)
        pset = api.offline()
        assert all(s.domain == 'TCP' for s in pset)
        assert len(api.episodic_memory) == 2
