"""
CP-agent APIs: offline strategy learning and online decision making
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..errors import PreconditionError, UnsupportedPopulationError
from ..oracle import Population, solve_aware
from ..strategy.dsl import Explore, Strategy, uniform_strategy
from .assistant import ProgrammingAssistant
from .demos import generate_demos
from .memory import EpisodeRecord, EpisodicMemory, StrategyMemory, \
    mac_summary, tcp_summary
from .node_agent import NodeAgent, action_label
from .observer import ObserverAgent
from .psa import StrategySet, psa_update
from .runner import (mac_signals, period_rng, play_episodes, run_mac,
                     run_tcp, tcp_signals)
from .strategy_agent import StrategyAgent
from .trace_view import DecisionTraceView

logger = logging.getLogger(__name__)


def get_api(family):
    """
    factory function for CP-agent APIs
    """
    if family == 'mac':
        return MacAgentAPI
    elif family == 'tcp':
        return TcpAgentAPI
    else:
        raise NotImplementedError('%s is not a valid API' % family)


class _AgentState(object):
    """What the loop remembers about one agent node between periods."""

    def __init__(self):
        self.strategy = None
        self.action = None
        self.decided = []


class CPAgent(DecisionTraceView):
    """Strategy, observer and node agents around one scenario."""

    family = None
    domain = None

    def __init__(self, spec, config, backend, judge_backend=None, seed=None,
                 verbose=False):
        DecisionTraceView.__init__(self, config.tracing)
        if spec.family != self.family:
            raise PreconditionError('{} scenario given to the {} API'.format(
                spec.family, self.family))
        self.spec = spec if seed is None else spec.with_seed(seed)
        self.config = config
        self.backend = backend
        self.judge_backend = judge_backend
        self.verbose = verbose
        self.strategy_memory = StrategyMemory()
        self.episodic_memory = EpisodicMemory()
        self.strategy_set = StrategySet()
        self.demos = []
        self.world = None
        self.env_changes = []
        self.escapes = 0
        self.fallbacks = 0
        self._states = {}
        self._node_agents = {}
        self.assistant = ProgrammingAssistant(
            backend, self.domain, self.frame_len, self.c_max,
            config.asi_retries)
        self.observer = ObserverAgent(config, backend, self.family)

    @property
    def seed(self):
        return self.spec.seed

    @property
    def agent_ids(self):
        return self.spec.agent_ids

    @property
    def frame_len(self):
        return 1

    @property
    def c_max(self):
        return 64

    def settings(self, agent_id):
        raise NotImplementedError

    def default_strategy(self):
        """Fixed strategy used when the strategy agent is switched off."""
        raise NotImplementedError

    def j_opt(self):
        raise NotImplementedError

    def episode_summary(self, log, agent_id):
        raise NotImplementedError

    def trajectory_summary(self, log, agent_id):
        raise NotImplementedError

    def signals(self, log, agent_id, period_len):
        raise NotImplementedError

    def simulate(self, decide):
        raise NotImplementedError

    def evaluate(self, s):
        """(J, summary) of `s` over the evaluation episodes."""
        values, logs = play_episodes(s, self.spec, self.config,
                                     seed=self.seed)
        j = float(np.mean(values))
        return j, self.episode_summary(logs[-1], self.agent_ids[0])

    def strategy_agent(self):
        return StrategyAgent(
            self.backend, self.assistant, self.strategy_memory,
            self.settings(self.agent_ids[0]),
            ranker=self.config.ranker_offline,
            judge_backend=self.judge_backend,
            estimator=lambda s: self.evaluate(s)[0],
            view=self if self.tracing else None)

    def offline(self):
        """Demonstrations, initial strategy, then reflect until J_opt or N_max."""
        cfg = self.config
        if not self.agent_ids:
            logger.info('Scenario has no agent node, nothing to learn')
            return self.strategy_set
        if not cfg.strategy_enabled:
            s = self.default_strategy()
            self.strategy_memory.add(s, 'fixed strategy')
            self.strategy_set.add(s, 'fixed strategy')
            return self.strategy_set

        self.begin('offline')
        self.demos = generate_demos(self.family, cfg.demo_k, self.seed, cfg)
        agent = self.strategy_agent()
        s = agent.generate_initial_strategy(self.demos)
        psa_update(self.strategy_set, s, self.backend)
        j, summary = self.evaluate(s)
        self.episodic_memory.add(EpisodeRecord(s.id, j, summary))
        j_opt = self.j_opt()
        logger.info('Initial strategy %s: J=%.4f, J_opt=%.4f', s.id, j, j_opt)

        t = 0
        while j < j_opt and t < cfg.n_max:
            t += 1
            refined = agent.reflect_and_refine(
                s, self.episodic_memory.latest(), j_opt)
            psa_update(self.strategy_set, refined, self.backend)
            if refined.id == s.id:
                logger.info('Reflection left strategy %s unchanged', s.id)
                break
            j_new, summary = self.evaluate(refined)
            self.episodic_memory.add(EpisodeRecord(
                refined.id, j_new, summary, 'refined from {}'.format(s.id), t))
            logger.info('Iteration %d: strategy %s J=%.4f', t, refined.id,
                        j_new)
            s, j = refined, j_new
        return self.strategy_set

    def load_offline(self, pset, memory_strategies=()):
        """Start from a strategy set learned earlier."""
        self.strategy_set = pset
        for s in memory_strategies:
            self.strategy_memory.add(s, 'loaded')
        return self

    def node_agent(self, agent_id):
        if agent_id not in self._node_agents:
            self._node_agents[agent_id] = NodeAgent(
                self.backend, self.assistant, self.settings(agent_id),
                self.config.escape_sigma, self.config.ranker_online,
                self.judge_backend)
        return self._node_agents[agent_id]

    def decide(self, world, agent_id, period, period_len):
        """Action of one agent for the coming query period."""
        state = self._states.setdefault(agent_id, _AgentState())
        log = world.log
        report = None
        if self.config.observer_enabled:
            report = self.observer.analyze(log, agent_id, state.decided,
                                           period_len)
        ctx = self.signals(log, agent_id, period_len)
        if report is not None:
            ctx.env_changed = report.env_changed
            if report.env_changed:
                self.env_changes.append((agent_id, self.position(world)))
        ctx.rng = period_rng(self.seed, agent_id, period)
        decision = self.node_agent(agent_id).online_decide(
            self.strategy_set, state.strategy, state.action,
            self.trajectory_summary(log, agent_id), report, ctx)

        state.strategy, state.action = decision.strategy, decision.action
        if decision.escape:
            self.escapes += 1
            state.decided = []
        elif decision.decided is not None:
            state.decided.append(decision.decided)
        if decision.fallback:
            self.fallbacks += 1

        if self.tracing:
            self.begin('online', period, agent_id)
            steps = [self.step('strategy',
                               'strategy {}'.format(decision.strategy.id),
                               inputs=self.strategy_set.ids,
                               outputs=decision.strategy.to_dict())]
            if report is not None and report.has_findings:
                steps.append(self.step(
                    'observer', report.label(), inputs=list(report.window),
                    outputs=report.to_dict(),
                    detail=[n.to_dict() for n in report.notable]))
            steps.append(self.step(
                'node', decision.label,
                detail={'reason': decision.reason} if decision.fallback
                else None))
            steps.append(self.step('action', action_label(decision.action),
                                   outputs=np.asarray(decision.action)
                                   .tolist()))
            self.add_path(steps)
        return decision.action

    def position(self, world):
        raise NotImplementedError

    def online(self):
        """Run the scenario with the strategy set fixed."""
        self.strategy_memory.freeze()
        self.episodic_memory.freeze()
        if self.agent_ids and not len(self.strategy_set):
            raise PreconditionError('online stage needs a strategy set')
        self.world = self.simulate(self.decide)
        logger.info('Online stage done: %d escapes, %d fallbacks',
                    self.escapes, self.fallbacks)
        return self.world

    def run(self):
        if not len(self.strategy_set):
            self.offline()
        return self.online()


class MacAgentAPI(CPAgent):

    family = 'mac'
    domain = 'MAC'

    @property
    def frame_len(self):
        return self.spec.frame_len

    def settings(self, agent_id):
        return {'family': 'mac', 'frame_len': self.spec.frame_len,
                'sigma': self.config.sigma, 'theta_hi': self.config.theta_hi,
                'alpha': self.config.alpha, 'agent_id': agent_id}

    def default_strategy(self):
        n = len(self.spec.live_ids(0))
        return uniform_strategy(round(1.0 / n, 4), self.spec.frame_len,
                                explore=Explore(0.0, self.config.sigma))

    def j_opt(self):
        cfg = self.config
        try:
            pop = Population.from_scenario(self.spec, 0, segment=0)
            objective = solve_aware(pop, cfg.alpha).objective
        except UnsupportedPopulationError as e:
            logger.info('No oracle target (%s)', e)
            return cfg.j_target if cfg.j_target is not None else math.inf
        return objective - (1.0 - cfg.j_opt_fraction) * abs(objective)

    def episode_summary(self, log, agent_id):
        return mac_summary(log, log.n_frames - log.n_frames // 2, agent_id,
                           self.config.theta_hi)

    def trajectory_summary(self, log, agent_id):
        if log.n_frames == 0:
            return {}
        return mac_summary(log, self.config.window_frames, agent_id,
                           self.config.theta_hi)

    def signals(self, log, agent_id, period_len):
        return mac_signals(log, self.config, agent_id, period_len)

    def position(self, world):
        return world.frame

    def simulate(self, decide):
        return run_mac(self.spec, self.config, decide, self.config.tcp_beta)


class TcpAgentAPI(CPAgent):

    family = 'tcp'
    domain = 'TCP'

    @property
    def c_max(self):
        return self.spec.c_max

    def settings(self, agent_id):
        return {'family': 'tcp', 'c_max': self.spec.c_max,
                'sigma': self.config.sigma, 'beta': self.config.tcp_beta,
                'agent_id': agent_id}

    def default_strategy(self):
        n = len([f for f in self.spec.flows if f.active_at(0)])
        cwnd = int(min(max(round(self.spec.pipe / max(n, 1)), 1),
                       self.spec.c_max))
        return Strategy('TCP', cwnd, explore=Explore(0.0, self.config.sigma))

    def j_opt(self):
        cfg = self.config
        return cfg.j_target if cfg.j_target is not None else math.inf

    def episode_summary(self, log, agent_id):
        return tcp_summary(log, log.n_rounds - log.n_rounds // 2, agent_id)

    def trajectory_summary(self, log, agent_id):
        if len(log) == 0:
            return {}
        return tcp_summary(log, self.config.tcp_window_rounds, agent_id)

    def signals(self, log, agent_id, period_len):
        return tcp_signals(log, self.config, self.spec.c_max, period_len)

    def position(self, world):
        return world.round

    def simulate(self, decide):
        return run_tcp(self.spec, self.config, decide, self.config.tcp_beta)
