"""Simulated demonstrations: sampled actions with their rewards."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..errors import PreconditionError
from ..metrics import clamped_alpha_fair_value
from ..simulation import get_world
from ..simulation.mac_world import vector_policy
from ..simulation.node import derive_seed
from ..simulation.scenario import (FlowConfig, NodeConfig, ScenarioSpec,
                                   TcpScenarioSpec)
from ..simulation.tcp_world import fixed_cwnd_policy

logger = logging.getLogger(__name__)

MAC_LABELS = ('CSMA', 'TDMA', 'ALOHA', 'DYNAMIC')
TCP_LABELS = ('RENO', 'VEGAS', 'TCP-DYNAMIC')
AGENT_ID = 9


@dataclass(frozen=True)
class DemoTuple:
    s: Tuple[float, ...]
    a: Union[float, int]
    r: float
    s_next: Tuple[float, ...]

    def to_dict(self):
        return {'s': list(self.s), 'a': self.a, 'r': self.r,
                's_next': list(self.s_next)}


@dataclass(frozen=True)
class DemoSet:
    label: str
    family: str
    tuples: Tuple[DemoTuple, ...]

    @property
    def k(self):
        return len(self.tuples)

    def best(self):
        return max(self.tuples, key=lambda t: t.r)

    def to_dict(self):
        return {'label': self.label, 'tuples': [t.to_dict() for t in self.tuples]}

    def item(self):
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(',', ':'))


def mac_demo_scenario(label, n_frames):
    """The labeled population the agent node (id 9) practices against."""
    agent = NodeConfig(AGENT_ID, 'agent')
    if label == 'CSMA':
        nodes = (NodeConfig(0, 'csma', window=2, max_stage=4), agent)
    elif label == 'TDMA':
        nodes = (NodeConfig(0, 'tdma', slots=frozenset((3, 5))), agent)
    elif label == 'ALOHA':
        nodes = (NodeConfig(0, 'aloha', q=0.2), NodeConfig(1, 'aloha', q=0.2),
                 agent)
    elif label == 'DYNAMIC':
        # one ALOHA node leaves halfway through the acting half
        nodes = (NodeConfig(0, 'aloha', q=0.2),
                 NodeConfig(1, 'aloha', q=0.2,
                            leave_frame=3 * n_frames // 4), agent)
    else:
        raise ValueError('Unrecognized demo label {}'.format(label))
    return ScenarioSpec(nodes, n_frames, name='demo-' + label.lower())


def tcp_demo_scenario(label, n_rounds):
    agent = FlowConfig(AGENT_ID, 'agent')
    if label == 'RENO':
        flows = (FlowConfig(0, 'reno'), agent)
    elif label == 'VEGAS':
        flows = (FlowConfig(0, 'vegas'), agent)
    elif label == 'TCP-DYNAMIC':
        flows = (FlowConfig(0, 'reno'), agent,
                 FlowConfig(1, 'vegas', start_round=3 * n_rounds // 4))
    else:
        raise ValueError('Unrecognized demo label {}'.format(label))
    return TcpScenarioSpec(flows, n_rounds, name='demo-' + label.lower())


def _rounded(values):
    return tuple(round(float(v), 4) for v in values)


def _mac_sample(spec, level, alpha, floor):
    world = get_world(spec)
    half = spec.total_frames // 2
    # the environment as it looks before the agent acts
    world.run_frames(vector_policy({AGENT_ID: np.zeros(spec.frame_len)}), half)
    s = world.log.outcome_rates()
    start = len(world.log)
    world.run_frames(
        vector_policy({AGENT_ID: np.full(spec.frame_len, level)}),
        spec.total_frames - half)
    s_next = world.log.outcome_rates(start)
    acting = world.log.tail(spec.total_frames - half)
    rates = acting.frame_successes().sum(axis=0) / len(acting)
    return DemoTuple(_rounded(s), level,
                     round(clamped_alpha_fair_value(rates, alpha, floor), 6),
                     _rounded(s_next))


def _tcp_state(records, base_rtt):
    rtts = {r.round_index: r.rtt for r in records}
    loss = sum(1 for r in records if r.loss) / max(len(records), 1)
    return (float(np.mean([v / base_rtt - 1.0 for v in rtts.values()])),
            loss)


def _tcp_sample(spec, cwnd):
    world = get_world(spec)
    half = spec.total_rounds // 2
    world.run_rounds(fixed_cwnd_policy({AGENT_ID: 1}), half)
    before = list(world.log.records)
    world.run_rounds(fixed_cwnd_policy({AGENT_ID: cwnd}),
                     spec.total_rounds - half)
    after = world.log.records[len(before):]
    per_round = {}
    for r in after:
        per_round[r.round_index] = per_round.get(r.round_index, 0.0) + r.reward
    return DemoTuple(_rounded(_tcp_state(before, spec.base_rtt)), cwnd,
                     round(float(np.mean(list(per_round.values()))), 6),
                     _rounded(_tcp_state(after, spec.base_rtt)))


def generate_demos(family, k, seed, config):
    """One DemoSet per label, K uniformly sampled actions each."""
    if k < 1:
        raise PreconditionError('K must be >= 1')
    demos = []
    labels = MAC_LABELS if family == 'mac' else TCP_LABELS
    for li, label in enumerate(labels):
        rng = np.random.default_rng([seed % 2 ** 64, 1000 + li])
        tuples = []
        for i in range(k):
            sample_seed = derive_seed(seed, li, i)
            if family == 'mac':
                spec = mac_demo_scenario(label, config.demo_frames)
                level = round(float(rng.uniform(0.0, 1.0)), 3)
                tuples.append(_mac_sample(spec.with_seed(sample_seed), level,
                                          config.alpha,
                                          config.throughput_floor))
            elif family == 'tcp':
                spec = tcp_demo_scenario(label, config.demo_rounds)
                cwnd = int(rng.integers(1, spec.c_max + 1))
                tuples.append(_tcp_sample(spec.with_seed(sample_seed), cwnd))
            else:
                raise ValueError('Unrecognized family {}'.format(family))
        demos.append(DemoSet(label, family, tuple(tuples)))
        logger.info('Demonstrations %s: best action %s of %d',
                    label, demos[-1].best().a, k)
    return demos
