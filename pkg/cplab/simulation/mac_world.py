import logging

from ..errors import MissingDecisionError
from .node import get_node, node_rng
from .trajectory import SlotOutcome, SlotResult, TrajectoryLog, \
    TrajectoryRecord
from .world import World

logger = logging.getLogger(__name__)


class MacWorld(World):
    """Slotted multiple-access channel shared by heterogeneous nodes.

    Within a slot, agent decisions come first, then the non-CSMA protocol
    nodes in id order, then the CSMA nodes in id order; a CSMA node senses
    the carrier busy when anything before it has committed to transmit.
    """

    def __init__(self, spec, verbose=False):
        super().__init__(spec, verbose)
        self._nodes = None
        self._live = ()
        self._agents = []
        self._protocols = []
        self._csma = []
        self._slot = 0
        self._applied_frame = -1
        self._log = None

    def load(self):
        self._nodes = {}
        for descr in self.spec.nodes:
            rng = node_rng(self.seed, descr.id)
            self._nodes[descr.id] = get_node(descr, rng)

    def start(self):
        self._live = ()
        self._slot = 0
        self._applied_frame = -1
        self._log = TrajectoryLog(self.frame_len)
        self._at_boundary()

    def step(self, decisions):
        return self.step_slot(decisions)

    @property
    def frame_len(self):
        return self.spec.frame_len

    @property
    def slot(self):
        return self._slot

    @property
    def frame(self):
        return self._slot // self.frame_len

    @property
    def frame_position(self):
        return self._slot % self.frame_len

    @property
    def nodes(self):
        return self._nodes

    @property
    def live_ids(self):
        return self._live

    @property
    def agent_ids(self):
        """Live agent nodes, in id order."""
        return tuple(n.id for n in self._agents)

    @property
    def log(self):
        return self._log

    @property
    def done(self):
        return self.frame >= self.spec.total_frames

    def apply_population_event(self, frame_index):
        """Join and retire the nodes scheduled for `frame_index`."""
        live = set(self._live)
        for descr in self.spec.nodes:
            if descr.join_frame == frame_index and descr.id not in live:
                self._nodes[descr.id].reset()
                live.add(descr.id)
            if descr.leave_frame == frame_index and descr.id in live:
                live.discard(descr.id)
        live = tuple(sorted(live))
        if live == self._live:
            return self
        self._live = live
        ordered = [self._nodes[i] for i in live]
        self._agents = [n for n in ordered if n.is_agent]
        self._protocols = [n for n in ordered
                           if not n.is_agent and not n.senses_carrier]
        self._csma = [n for n in ordered if n.senses_carrier]
        self._log.mark_event(frame_index, live)
        if frame_index > 0 or self._verbose:
            logger.info('Frame %d: live population %s', frame_index,
                        '+'.join(n.descr.label() for n in ordered))
        return self

    def _at_boundary(self):
        if self.frame_position == 0 and self.frame > self._applied_frame:
            self.apply_population_event(self.frame)
            self._applied_frame = self.frame

    def step_slot(self, decisions, probs=None):
        """Resolve one slot given the transmit decisions of the live agents."""
        self._at_boundary()
        slot = self._slot
        pos = slot % self.frame_len
        transmitters = []
        tx = {}
        for node in self._agents:
            try:
                d = bool(decisions[node.id])
            except KeyError:
                raise MissingDecisionError(
                    'agent node {} has no decision for slot {}'.format(
                        node.id, slot))
            tx[node.id] = d
            if d:
                transmitters.append(node.id)
        for node in self._protocols:
            d = node.decide(pos)
            tx[node.id] = d
            if d:
                transmitters.append(node.id)
        for node in self._csma:
            d = node.decide(pos, carrier_busy=bool(transmitters))
            tx[node.id] = d
            if d:
                transmitters.append(node.id)

        outcome = SlotOutcome.from_count(len(transmitters))
        winner = transmitters[0] if outcome is SlotOutcome.SUCCESS else None
        reward = tuple(1 if i == winner else 0 for i in self._live)
        for node in self._protocols:
            node.update(tx[node.id], outcome)
        for node in self._csma:
            node.update(tx[node.id], outcome)

        result = SlotResult(slot, slot // self.frame_len, pos, self._live,
                            tuple(sorted(transmitters)), outcome, reward)
        records = []
        for node in self._agents:
            p = float(tx[node.id]) if probs is None else float(
                probs.get(node.id, tx[node.id]))
            records.append(TrajectoryRecord(node.id, slot, pos, p,
                                            tx[node.id], outcome, reward,
                                            self._live))
        self._log.append(result, records)
        self._slot += 1
        return result

    def run_frames(self, policy, n_frames):
        """Simulate whole frames.

        Args:
            policy: callable (world, slot_index) -> {agent id: transmit
                probability}; the Bernoulli draw uses the agent's own stream.
            n_frames: number of frames to simulate.

        Returns:
            the cumulative TrajectoryLog of the world.
        """
        for _ in range(n_frames):
            for _ in range(self.frame_len):
                self._at_boundary()
                if self._agents:
                    probs = policy(self, self._slot)
                    decisions = {}
                    for node in self._agents:
                        if node.id in probs:
                            decisions[node.id] = node.draw(probs[node.id])
                else:
                    probs, decisions = {}, {}
                self.step_slot(decisions, probs)
        return self._log


def vector_policy(vectors):
    """Policy holding one per-position probability vector per agent."""
    def policy(world, slot):
        pos = slot % world.frame_len
        return {nid: float(v[pos]) for nid, v in vectors.items()}
    return policy


def silent_policy(world, slot):
    return {nid: 0.0 for nid in world.agent_ids}
