"""MAC node state machines."""

import numpy as np

from .trajectory import SlotOutcome


def node_rng(seed, node_id, *extra):
    """PRNG stream of one node, split from the scenario seed by node id."""
    return np.random.default_rng([seed % 2 ** 64, node_id] + list(extra))


def derive_seed(seed, *keys):
    """Scenario seed of a sub-run, split from `seed` by `keys`."""
    state = np.random.SeedSequence([seed % 2 ** 64] + list(keys))
    return int(state.generate_state(1, np.uint64)[0])


class Node(object):
    """Node base class."""

    senses_carrier = False

    def __init__(self, descr, rng):
        self._descr = descr
        self._rng = rng

    @property
    def id(self):
        return self._descr.id

    @property
    def kind(self):
        return self._descr.kind

    @property
    def descr(self):
        return self._descr

    @property
    def rng(self):
        return self._rng

    @property
    def is_agent(self):
        return self._descr.is_agent

    def reset(self):
        """Initialize the protocol state when the node becomes live."""
        pass

    def decide(self, frame_position, carrier_busy=False):
        """Whether the node transmits in the current slot."""
        raise NotImplementedError

    def update(self, transmitted, outcome):
        """Advance the state after the slot is resolved."""
        pass


class AgentNode(Node):
    """Node driven from outside; it only draws its own Bernoulli trials."""

    def draw(self, prob):
        return bool(self._rng.random() < prob)

    def decide(self, frame_position, carrier_busy=False):
        raise NotImplementedError('agent nodes take decisions from a policy')


class AlohaNode(Node):

    def decide(self, frame_position, carrier_busy=False):
        return bool(self._rng.random() < self._descr.q)


class TdmaNode(Node):

    def decide(self, frame_position, carrier_busy=False):
        return frame_position in self._descr.slots


class BackoffNode(Node):
    """Shared counter and stage bookkeeping of the backoff protocols."""

    def __init__(self, descr, rng):
        super().__init__(descr, rng)
        self._w = 0
        self._stage = 0

    @property
    def counter(self):
        return self._w

    @property
    def stage(self):
        return self._stage

    @property
    def window(self):
        return self._descr.window

    @property
    def max_stage(self):
        return self._descr.max_stage or 0

    @property
    def current_window(self):
        return (2 ** min(self._stage, self.max_stage)) * self.window

    def reset(self):
        self._stage = 0
        self._resample()

    def _resample(self):
        self._w = int(self._rng.integers(0, self.current_window))

    def _next_stage(self, outcome):
        if outcome is SlotOutcome.COLLIDED:
            self._stage = min(self._stage + 1, self.max_stage)
        else:
            self._stage = 0


class FwAlohaNode(BackoffNode):
    """Fixed-window ALOHA: transmit when the counter reaches zero."""

    def decide(self, frame_position, carrier_busy=False):
        return self._w == 0

    def update(self, transmitted, outcome):
        if transmitted:
            self._resample()
        else:
            self._w -= 1


class EbAlohaNode(FwAlohaNode):
    """Exponential-backoff ALOHA."""

    def update(self, transmitted, outcome):
        if transmitted:
            self._next_stage(outcome)
            self._resample()
        else:
            self._w -= 1


class CsmaNode(BackoffNode):
    """Slotted CSMA with a frozen counter while the carrier is busy.

    The counter is decremented in the idle slot it observes, and the node
    transmits in the same slot when the decrement reaches zero.
    """

    senses_carrier = True

    def decide(self, frame_position, carrier_busy=False):
        if carrier_busy:
            return False
        if self._w > 0:
            self._w -= 1
        return self._w == 0

    def update(self, transmitted, outcome):
        if transmitted:
            self._next_stage(outcome)
            self._resample()


_NODE_CLASSES = {
    'aloha': AlohaNode,
    'tdma': TdmaNode,
    'csma': CsmaNode,
    'fw_aloha': FwAlohaNode,
    'eb_aloha': EbAlohaNode,
    'agent': AgentNode,
    'aware': AgentNode,
}


def get_node(descr, rng):
    """Create the state machine of a node from its description."""
    try:
        cls = _NODE_CLASSES[descr.kind]
    except KeyError:
        raise ValueError('Unrecognized node kind {}'.format(descr.kind))
    return cls(descr, rng)
