"""Congestion controllers of the TCP flows."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

SLOW_START = 'slow-start'
CONGESTION_AVOIDANCE = 'congestion-avoidance'

# Vegas thresholds in packets.
VEGAS_ALPHA = 1.0
VEGAS_BETA = 3.0

REWARD_FLOOR_PENALTY = 5.0


@dataclass(frozen=True)
class FlowState:
    cwnd: float
    ssthresh: float
    base_rtt_est: float = math.inf
    mode: str = SLOW_START


def _clip(cwnd, c_max):
    return min(max(cwnd, 1.0), float(c_max))


def reno_update(state, feedback, c_max=64):
    """One round of Reno: slow start, additive increase, halve on loss."""
    if feedback.loss:
        ssthresh = max(state.cwnd / 2.0, 2.0)
        return FlowState(_clip(ssthresh, c_max), ssthresh, state.base_rtt_est,
                         CONGESTION_AVOIDANCE)
    if state.mode == SLOW_START:
        cwnd = 2.0 * state.cwnd
        mode = SLOW_START
        if cwnd >= state.ssthresh:
            cwnd = state.ssthresh
            mode = CONGESTION_AVOIDANCE
        return dataclasses.replace(state, cwnd=_clip(cwnd, c_max), mode=mode)
    return dataclasses.replace(state, cwnd=_clip(state.cwnd + 1.0, c_max))


def vegas_update(state, feedback, c_max=64):
    """One round of Vegas against the minimum rtt seen so far."""
    base = min(state.base_rtt_est, feedback.rtt)
    # expected minus actual rate, expressed in packets
    diff = state.cwnd * (1.0 - base / feedback.rtt)
    cwnd = state.cwnd
    if diff < VEGAS_ALPHA:
        cwnd += 1.0
    elif diff > VEGAS_BETA:
        cwnd -= 1.0
    return FlowState(_clip(cwnd, c_max), state.ssthresh, base,
                     CONGESTION_AVOIDANCE)


def tcp_reward(acks, rtt, beta=0.5):
    """log(a) - beta * r, with a finite floor when nothing was acknowledged."""
    if acks <= 0:
        return math.log(1.0) - beta * rtt - REWARD_FLOOR_PENALTY
    return math.log(acks) - beta * rtt


class Controller(object):
    """Controller base class."""

    def __init__(self, descr, c_max):
        self._descr = descr
        self._c_max = c_max
        self._state = FlowState(cwnd=_clip(descr.init_cwnd, c_max),
                                ssthresh=float(c_max))

    @property
    def id(self):
        return self._descr.id

    @property
    def descr(self):
        return self._descr

    @property
    def state(self):
        return self._state

    @property
    def cwnd(self):
        return self._state.cwnd

    def update(self, feedback):
        raise NotImplementedError


class RenoController(Controller):

    def update(self, feedback):
        self._state = reno_update(self._state, feedback, self._c_max)


class VegasController(Controller):

    def __init__(self, descr, c_max):
        super().__init__(descr, c_max)
        self._state = dataclasses.replace(self._state,
                                          mode=CONGESTION_AVOIDANCE)

    def update(self, feedback):
        self._state = vegas_update(self._state, feedback, self._c_max)


class AgentController(Controller):
    """Window set from outside; feedback does not move it."""

    def set_cwnd(self, cwnd):
        self._state = dataclasses.replace(self._state, cwnd=float(cwnd))

    def update(self, feedback):
        pass


def get_controller(descr, c_max):
    if descr.controller == 'reno':
        return RenoController(descr, c_max)
    elif descr.controller == 'vegas':
        return VegasController(descr, c_max)
    elif descr.controller == 'agent':
        return AgentController(descr, c_max)
    else:
        raise ValueError('Unrecognized controller {}'.format(
            descr.controller))
