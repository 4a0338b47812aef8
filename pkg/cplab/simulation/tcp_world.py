import logging

from ..errors import OverrideOutOfRangeError
from .flow import get_controller, tcp_reward
from .trajectory import RoundFeedback, RoundRecord, TcpLog
from .world import World

logger = logging.getLogger(__name__)

# drops below this are rounding noise of the fluid model
_EPS = 1e-9


class TcpWorld(World):
    """Flows sharing one drop-tail bottleneck, advanced one RTT round at a time."""

    def __init__(self, spec, beta=0.5, verbose=False):
        super().__init__(spec, verbose)
        self._beta = beta
        self._flows = None
        self._round = 0
        self._log = None

    def load(self):
        self._flows = {}
        for descr in self.spec.flows:
            self._flows[descr.id] = get_controller(descr, self.spec.c_max)

    def start(self):
        self._round = 0
        self._log = TcpLog(self.spec.packet_bytes, self.spec.base_rtt)

    def step(self, decisions):
        return self.step_round(decisions)

    @property
    def flows(self):
        return self._flows

    @property
    def round(self):
        return self._round

    @property
    def beta(self):
        return self._beta

    @property
    def log(self):
        return self._log

    @property
    def done(self):
        return self._round >= self.spec.total_rounds

    @property
    def active_ids(self):
        return tuple(sorted(f.id for f in self._flows.values()
                            if f.descr.active_at(self._round)))

    @property
    def agent_ids(self):
        return tuple(i for i in self.active_ids if self._flows[i].descr.is_agent)

    def step_round(self, overrides=None):
        """Advance one round; returns RoundFeedback per active flow."""
        overrides = overrides or {}
        active = [self._flows[i] for i in self.active_ids]
        active_ids = {f.id for f in active}
        for fid, cwnd in overrides.items():
            if fid not in active_ids or not self._flows[fid].descr.is_agent:
                raise OverrideOutOfRangeError(
                    'flow {} is not an active agent flow'.format(fid))
            if not 1 <= cwnd <= self.spec.c_max:
                raise OverrideOutOfRangeError(
                    'cwnd {} of flow {} outside [1, {}]'.format(
                        cwnd, fid, self.spec.c_max))
            self._flows[fid].set_cwnd(cwnd)

        offered = sum(f.cwnd for f in active)
        queue = max(0.0, offered - self.spec.pipe)
        overflow = max(0.0, queue - self.spec.buffer_packets)
        queue = min(queue, self.spec.buffer_packets)
        rtt = self.spec.base_rtt + queue / self.spec.capacity

        feedback = {}
        records = []
        for f in active:
            cwnd = f.cwnd
            drops = overflow * cwnd / offered if overflow > 0 else 0.0
            acks = cwnd - drops
            loss = drops > _EPS
            reward = tcp_reward(acks, rtt, self._beta)
            fb = RoundFeedback(acks, rtt, loss, drops, reward, acks <= 0)
            feedback[f.id] = fb
            records.append(RoundRecord(self._round, f.id, cwnd, acks, rtt,
                                       loss, drops, reward))
        for f in active:
            f.update(feedback[f.id])
        self._log.extend(records)
        self._round += 1
        return feedback

    def run_rounds(self, policy, n_rounds):
        """Simulate rounds; `policy(world, round)` returns agent cwnd overrides."""
        for _ in range(n_rounds):
            overrides = policy(self, self._round) if self.agent_ids else {}
            self.step_round(overrides)
        return self._log


def fixed_cwnd_policy(cwnds):
    def policy(world, round_index):
        return {fid: c for fid, c in cwnds.items() if fid in world.agent_ids}
    return policy
