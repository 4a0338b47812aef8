"""Strategy, episodic and trajectory memories of the CP-agent."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import PreconditionError
from ..metrics import slot_utilization
from ..simulation.trajectory import SlotOutcome

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpisodeRecord:
    strategy_id: str
    j_estimate: float
    summary: dict = field(default_factory=dict)
    reflection_text: Optional[str] = None
    iteration: int = 0

    def to_dict(self):
        return {'strategy_id': self.strategy_id,
                'j_estimate': self.j_estimate,
                'iteration': self.iteration,
                'summary': self.summary,
                'reflection_text': self.reflection_text}


class _Memory(object):

    def __init__(self):
        self._entries = []
        self._frozen = False

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def frozen(self):
        return self._frozen

    def freeze(self):
        """No writes from here on."""
        self._frozen = True

    def _append(self, entry):
        if self._frozen:
            raise PreconditionError(
                '{} is read-only during the online stage'.format(
                    type(self).__name__))
        self._entries.append(entry)


class StrategyMemory(_Memory):
    """Append-only record of every strategy the agents produced."""

    def add(self, strategy, note=''):
        self._append({'id': strategy.id, 'note': note,
                      'strategy': strategy})
        logger.info('Stored %s strategy %s (%s)', strategy.provenance,
                    strategy.id, note)

    def get(self, strategy_id):
        for e in self._entries:
            if e['id'] == strategy_id:
                return e['strategy']
        raise KeyError(strategy_id)

    @property
    def strategies(self):
        return [e['strategy'] for e in self._entries]

    def to_dict(self):
        return [{'id': e['id'], 'note': e['note'],
                 'strategy': e['strategy'].to_dict()} for e in self._entries]


class EpisodicMemory(_Memory):

    def add(self, record):
        self._append(record)

    @property
    def records(self):
        return list(self._entries)

    def latest(self):
        return self._entries[-1] if self._entries else None

    def to_dict(self):
        return [r.to_dict() for r in self._entries]


def mac_summary(log, n_frames, agent_id=None, theta_hi=0.9):
    """What a window of the MAC trajectory shows, in prompt-ready form."""
    tail = log.tail(n_frames)
    frame_len = tail.frame_len
    slots = {}
    wins = {}
    for s in tail.slots:
        if s.outcome is SlotOutcome.SUCCESS:
            winner = s.transmitters[0]
            slots.setdefault(winner, set()).add(s.frame_position)
            wins[winner] = wins.get(winner, 0) + 1
    total = max(tail.n_frames * frame_len, 1)
    exclude = () if agent_id is None else (agent_id,)
    util = slot_utilization(tail, tail.n_frames, exclude)
    nodes = [{'node': n,
              'agent': n == agent_id,
              'throughput': round(wins.get(n, 0) / total, 4),
              'success_slots': sorted(slots.get(n, ()))}
             for n in tail.node_ids()]
    return {'frames': [tail.first_frame, tail.first_frame + tail.n_frames],
            'live_ids': list(tail.slots[-1].live_ids),
            'nodes': nodes,
            'utilization': [round(float(u), 4) for u in util],
            'overused': [k for k, u in enumerate(util) if u >= theta_hi]}


def tcp_summary(log, n_rounds, agent_id=None):
    tail = log.tail(n_rounds)
    by_flow = {}
    for r in tail.records:
        by_flow.setdefault(r.flow_id, []).append(r)
    last = tail.records[-1].round_index
    active = sorted(r.flow_id for r in tail.records if r.round_index == last)
    flows = []
    for fid in sorted(by_flow):
        recs = by_flow[fid]
        flows.append({'flow': fid,
                      'agent': fid == agent_id,
                      'active': fid in active,
                      'mean_acks': round(float(np.mean([r.acks for r in recs])), 4),
                      'mean_cwnd': round(float(np.mean([r.cwnd for r in recs])), 4),
                      'loss_rounds': sum(1 for r in recs if r.loss)})
    rtts = {r.round_index: r.rtt for r in tail.records}
    inflation = np.mean([v / log.base_rtt - 1.0 for v in rtts.values()])
    return {'rounds': [tail.records[0].round_index, last + 1],
            'active_ids': active,
            'flows': flows,
            'rtt_inflation': round(float(inflation), 4)}
