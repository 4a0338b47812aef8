"""
Observer agent: convergence, environment changes and notable slots
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import BackendError, WindowTooShortError
from ..llm.prompts import json_span, render
from ..metrics import slot_utilization
from ..simulation.trajectory import SlotOutcome

logger = logging.getLogger(__name__)

OVERUSED = 'overused'
UNUSED = 'unused'


@dataclass(frozen=True)
class Notable:
    slot: int
    kind: str
    utilization: float

    def to_dict(self):
        return {'slot': self.slot, 'kind': self.kind,
                'utilization': self.utilization}


@dataclass(frozen=True)
class ObserverReport:
    converged: bool
    env_changed: bool
    notable: Tuple[Notable, ...]
    window: Tuple[int, int]
    utilization: Optional[Tuple[float, ...]] = None
    collision_rate: float = 0.0
    rtt_inflation: float = 0.0
    summary: Optional[str] = None

    def slots(self, kind):
        return [n.slot for n in self.notable if n.kind == kind]

    @property
    def has_findings(self):
        return bool(self.notable) or self.env_changed or self.converged

    def label(self):
        """One line per finding, e.g. `slots 3,5 utilization 1.0`."""
        parts = []
        groups = {}
        for n in self.notable:
            if n.kind == OVERUSED:
                groups.setdefault(round(n.utilization, 2), []).append(n.slot)
        for util in sorted(groups, reverse=True):
            slots = groups[util]
            parts.append('{} {} utilization {}'.format(
                'slots' if len(slots) > 1 else 'slot',
                ','.join(str(s) for s in slots), util))
        unused = self.slots(UNUSED)
        if unused:
            parts.append('{} {} unused'.format(
                'slots' if len(unused) > 1 else 'slot',
                ','.join(str(s) for s in unused)))
        if self.env_changed:
            parts.append('environment changed')
        if self.converged:
            parts.append('action converged')
        return '; '.join(parts)

    def replace_summary(self, summary):
        return ObserverReport(self.converged, self.env_changed, self.notable,
                              self.window, self.utilization,
                              self.collision_rate, self.rtt_inflation, summary)

    def to_dict(self):
        d = {'converged': self.converged,
             'env_changed': self.env_changed,
             'overused': self.slots(OVERUSED),
             'unused': self.slots(UNUSED),
             'notable': [n.to_dict() for n in self.notable],
             'window': list(self.window),
             'collision_rate': self.collision_rate,
             'rtt_inflation': self.rtt_inflation}
        if self.utilization is not None:
            d['utilization'] = list(self.utilization)
        return d


def action_converged(actions, eps, k):
    """True when the last k changes between actions were all below eps (L-inf)."""
    if len(actions) < k + 1:
        return False
    recent = [np.atleast_1d(np.asarray(a, dtype=float))
              for a in actions[-(k + 1):]]
    return all(float(np.max(np.abs(b - a))) < eps
               for a, b in zip(recent[:-1], recent[1:]))


def _rate_shift(log, n_frames):
    """Largest change of the S/C/I rates between the halves of the window."""
    slots = n_frames * log.frame_len
    end = log.n_frames * log.frame_len
    start = end - slots
    mid = start + (n_frames // 2) * log.frame_len
    older = log.outcome_rates(start, mid)
    recent = log.outcome_rates(mid, end)
    return float(np.max(np.abs(recent - older)))


def recent_event(log, since_frame):
    """Whether the population changed at or after `since_frame`.

    The population mark of the first frame of a run is not a change.
    """
    events = log.events
    if not events:
        return False
    first = events[0][0]
    return any(f > first and f >= since_frame for f, _ in events)


def collision_rate(log, n_frames):
    tail = log.tail(n_frames)
    if not tail.slots:
        return 0.0
    collided = sum(1 for s in tail.slots if s.outcome is SlotOutcome.COLLIDED)
    return collided / len(tail.slots)


def observer_analyze(log, config, agent_id=None, actions=(),
                     period_frames=None):
    """Report on the last `config.window_frames` frames of a MAC log.

    Args:
        log: TrajectoryLog of the run so far.
        config: AgentConfig with the observer thresholds.
        agent_id: the observing node; its own transmissions do not count
            towards slot utilization.
        actions: the decided action of each past query period, oldest first.
        period_frames: frames per query period; defaults from the config.

    Raises:
        WindowTooShortError: fewer complete frames than the window.
    """
    m = config.window_frames
    if log.n_frames < m:
        raise WindowTooShortError(
            'observer needs {} frames, log has {}'.format(m, log.n_frames))
    if period_frames is None:
        period_frames = config.period_frames(log.frame_len)
    exclude = () if agent_id is None else (agent_id,)
    util = slot_utilization(log, m, exclude)
    notable = []
    for k, u in enumerate(util):
        if u >= config.theta_hi:
            notable.append(Notable(k, OVERUSED, round(float(u), 4)))
        elif u == 0:
            notable.append(Notable(k, UNUSED, 0.0))
    end = log.first_frame + log.n_frames
    changed = recent_event(log, end - period_frames) or \
        _rate_shift(log, m) > config.shift_delta
    return ObserverReport(
        converged=action_converged(list(actions), config.converge_eps,
                                   config.converge_k),
        env_changed=bool(changed),
        notable=tuple(notable),
        window=(end - m, end),
        utilization=tuple(round(float(u), 4) for u in util),
        collision_rate=round(collision_rate(log, period_frames), 4),
        rtt_inflation=0.0)


def rtt_inflation(log, n_rounds):
    tail = log.tail(n_rounds)
    rtts = {r.round_index: r.rtt for r in tail.records}
    if not rtts:
        return 0.0
    return float(np.mean([v / log.base_rtt - 1.0 for v in rtts.values()]))


def _active_sets(records):
    out = {}
    for r in records:
        out.setdefault(r.round_index, set()).add(r.flow_id)
    return [frozenset(out[k]) for k in sorted(out)]


def tcp_observer_analyze(log, config, actions=(), period_rounds=None):
    """TCP counterpart: convergence, flow-set changes and RTT-inflation shifts."""
    m = config.tcp_window_rounds
    if log.n_rounds < m:
        raise WindowTooShortError(
            'observer needs {} rounds, log has {}'.format(m, log.n_rounds))
    if period_rounds is None:
        period_rounds = config.tcp_query_rounds
    window = log.tail(m)
    first = window.records[0].round_index
    last = window.records[-1].round_index
    # one round before the period so a change at its first round shows
    sets = _active_sets(log.tail(period_rounds + 1).records)
    flows_changed = any(a != b for a, b in zip(sets[:-1], sets[1:]))
    half = first + m // 2
    older = [r for r in window.records if r.round_index < half]
    recent = [r for r in window.records if r.round_index >= half]
    shift = abs(_mean_inflation(recent, log.base_rtt) -
                _mean_inflation(older, log.base_rtt))
    return ObserverReport(
        converged=action_converged(list(actions), config.converge_eps,
                                   config.converge_k),
        env_changed=bool(flows_changed or shift > config.shift_delta),
        notable=(),
        window=(first, last + 1),
        rtt_inflation=round(rtt_inflation(log, period_rounds), 4))


def _mean_inflation(records, base_rtt):
    rtts = {r.round_index: r.rtt for r in records}
    if not rtts:
        return 0.0
    return float(np.mean([v / base_rtt - 1.0 for v in rtts.values()]))


class ObserverAgent(object):
    """Runs the analysis and has the backend phrase it for the node agent."""

    def __init__(self, config, backend=None, family='mac'):
        self._config = config
        self._backend = backend
        self._family = family

    @property
    def family(self):
        return self._family

    def analyze(self, log, agent_id=None, actions=(), period=None):
        """ObserverReport of the current window, or None while it is too short."""
        try:
            if self._family == 'tcp':
                report = tcp_observer_analyze(log, self._config, actions,
                                              period)
            else:
                report = observer_analyze(log, self._config, agent_id,
                                          actions, period)
        except WindowTooShortError as e:
            logger.debug('No observer report yet: %s', e)
            return None
        return report.replace_summary(self.summarize(report))

    def summarize(self, report):
        if self._backend is None:
            return report.label() or None
        request = render('observer-summary', request_tag='observer-summary',
                         report=report.to_dict())
        try:
            reply = self._backend.complete(request)
            return str(json.loads(json_span(reply))['summary'])
        except (ValueError, KeyError, TypeError):
            # plain-text summaries are fine too
            return reply.strip()
        except BackendError as e:
            logger.warning('Observer summary unavailable: %s', e)
            return report.label() or None
