"""Scenario descriptions for the MAC and TCP simulators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

from ..errors import InvalidSpecError

AGENT_KINDS = ('agent', 'aware')

# Parameters used when a scenario file leaves them out.
KIND_DEFAULTS = {
    'csma': {'window': 2, 'max_stage': 4},
    'fw_aloha': {'window': 4, 'max_stage': None},
    'eb_aloha': {'window': 2, 'max_stage': 2},
}

_SEED_MIN = -(2 ** 63)
_SEED_MAX = 2 ** 64


def _check_seed(seed):
    if not _SEED_MIN <= seed < _SEED_MAX:
        raise InvalidSpecError('seed', 'must fit in 64 bits')


@dataclass(frozen=True)
class NodeConfig:
    id: int
    kind: str
    q: Optional[float] = None
    slots: FrozenSet[int] = frozenset()
    window: Optional[int] = None
    max_stage: Optional[int] = None
    join_frame: int = 0
    leave_frame: Optional[int] = None

    @property
    def is_agent(self):
        return self.kind in AGENT_KINDS

    def live_at(self, frame):
        return self.join_frame <= frame and (
            self.leave_frame is None or frame < self.leave_frame)

    def to_dict(self):
        d = {'id': self.id, 'kind': self.kind, 'join_frame': self.join_frame}
        if self.kind == 'aloha':
            d['q'] = self.q
        if self.kind == 'tdma':
            d['slots'] = sorted(self.slots)
        if self.window is not None:
            d['window'] = self.window
        if self.max_stage is not None:
            d['max_stage'] = self.max_stage
        if self.leave_frame is not None:
            d['leave_frame'] = self.leave_frame
        return d

    def label(self):
        """Short population label, e.g. `A(0.2)` or `T{3,5}`."""
        if self.kind == 'aloha':
            return 'A({:g})'.format(self.q)
        if self.kind == 'tdma':
            return 'T{{{}}}'.format(','.join(str(s) for s in sorted(self.slots)))
        return {'csma': 'C', 'fw_aloha': 'FW', 'eb_aloha': 'EB',
                'agent': 'H', 'aware': 'W'}[self.kind]


@dataclass(frozen=True)
class Segment:
    """Frames [start, end) during which the live population is fixed."""

    index: int
    start: int
    end: int
    live_ids: Tuple[int, ...]


@dataclass(frozen=True)
class ScenarioSpec:
    nodes: Tuple[NodeConfig, ...]
    total_frames: int
    frame_len: int = 10
    slot_duration: float = 0.001
    seed: int = 0
    name: Optional[str] = None

    family = 'mac'
    version = 'mac-v1'

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(self.nodes))
        check_scenario(self)

    @property
    def node_map(self):
        return {n.id: n for n in self.nodes}

    @property
    def agent_ids(self):
        return tuple(n.id for n in sorted(self.nodes, key=lambda n: n.id)
                     if n.is_agent)

    def live_ids(self, frame):
        return tuple(sorted(n.id for n in self.nodes if n.live_at(frame)))

    def event_frames(self):
        """Frames strictly inside the horizon where the population changes."""
        frames = set()
        for n in self.nodes:
            for f in (n.join_frame, n.leave_frame):
                if f is not None and 0 < f < self.total_frames:
                    frames.add(f)
        return sorted(frames)

    def segments(self):
        bounds = [0] + self.event_frames() + [self.total_frames]
        segs = []
        for start, end in zip(bounds[:-1], bounds[1:]):
            segs.append(Segment(len(segs), start, end, self.live_ids(start)))
        return segs

    def with_seed(self, seed):
        return ScenarioSpec(self.nodes, self.total_frames, self.frame_len,
                            self.slot_duration, seed, self.name)

    def with_frames(self, total_frames):
        return ScenarioSpec(self.nodes, total_frames, self.frame_len,
                            self.slot_duration, self.seed, self.name)

    def describe(self):
        live = [self.node_map[i] for i in self.live_ids(0)]
        return '+'.join(n.label() for n in live)

    def to_dict(self):
        d = {'version': self.version, 'frame_len': self.frame_len,
             'total_frames': self.total_frames,
             'slot_duration': self.slot_duration, 'seed': self.seed,
             'nodes': [n.to_dict() for n in self.nodes]}
        if self.name is not None:
            d['name'] = self.name
        return d


def check_scenario(spec):
    """Raise InvalidSpecError naming the first violated invariant."""
    if spec.total_frames < 1:
        raise InvalidSpecError('total_frames', 'must be >= 1')
    if spec.frame_len < 1:
        raise InvalidSpecError('frame_len', 'must be >= 1')
    if spec.slot_duration <= 0:
        raise InvalidSpecError('slot_duration', 'must be > 0')
    _check_seed(spec.seed)
    if not spec.nodes:
        raise InvalidSpecError('nodes', 'at least one node is required')
    seen = set()
    for i, n in enumerate(spec.nodes):
        path = 'nodes[{}]'.format(i)
        if n.id in seen:
            raise InvalidSpecError(path + '.id', 'duplicate id {}'.format(n.id))
        if n.id < 0:
            raise InvalidSpecError(path + '.id', 'must be >= 0')
        seen.add(n.id)
        if n.kind == 'aloha':
            if n.q is None or not 0.0 <= n.q <= 1.0:
                raise InvalidSpecError(path + '.q', 'must lie in [0, 1]')
        elif n.kind == 'tdma':
            for s in n.slots:
                if not 0 <= s < spec.frame_len:
                    raise InvalidSpecError(
                        path + '.slots',
                        'slot {} outside [0, {})'.format(s, spec.frame_len))
        elif n.kind in KIND_DEFAULTS:
            if n.window is None or n.window < 1:
                raise InvalidSpecError(path + '.window', 'must be >= 1')
            if n.kind != 'fw_aloha' and (n.max_stage is None
                                         or n.max_stage < 0):
                raise InvalidSpecError(path + '.max_stage', 'must be >= 0')
        elif n.kind not in AGENT_KINDS:
            raise InvalidSpecError(path + '.kind',
                                   'unknown kind {!r}'.format(n.kind))
        if n.join_frame < 0:
            raise InvalidSpecError(path + '.join_frame', 'must be >= 0')
        if n.leave_frame is not None and n.leave_frame <= n.join_frame:
            raise InvalidSpecError(path + '.leave_frame',
                                   'must be greater than join_frame')
    if not spec.live_ids(0):
        raise InvalidSpecError('nodes', 'no node is live at frame 0')


@dataclass(frozen=True)
class FlowConfig:
    id: int
    controller: str
    start_round: int = 0
    stop_round: Optional[int] = None
    init_cwnd: float = 1.0

    @property
    def is_agent(self):
        return self.controller == 'agent'

    def active_at(self, round_index):
        return self.start_round <= round_index and (
            self.stop_round is None or round_index < self.stop_round)

    def to_dict(self):
        d = {'id': self.id, 'controller': self.controller,
             'start_round': self.start_round, 'init_cwnd': self.init_cwnd}
        if self.stop_round is not None:
            d['stop_round'] = self.stop_round
        return d


@dataclass(frozen=True)
class TcpScenarioSpec:
    flows: Tuple[FlowConfig, ...]
    total_rounds: int
    capacity_mbps: float = 1.0
    packet_bytes: int = 1000
    base_rtt: float = 0.1
    buffer: Optional[float] = None
    c_max: int = 64
    seed: int = 0
    name: Optional[str] = None

    family = 'tcp'
    version = 'tcp-v1'

    def __post_init__(self):
        object.__setattr__(self, 'flows', tuple(self.flows))
        check_tcp_scenario(self)

    @property
    def capacity(self):
        """Bottleneck rate in packets per second."""
        return self.capacity_mbps * 1e6 / (8.0 * self.packet_bytes)

    @property
    def pipe(self):
        """Bandwidth-delay product in packets."""
        return self.capacity * self.base_rtt

    @property
    def buffer_packets(self):
        return self.pipe if self.buffer is None else self.buffer

    @property
    def agent_ids(self):
        return tuple(f.id for f in sorted(self.flows, key=lambda f: f.id)
                     if f.is_agent)

    def with_seed(self, seed):
        return TcpScenarioSpec(self.flows, self.total_rounds,
                               self.capacity_mbps, self.packet_bytes,
                               self.base_rtt, self.buffer, self.c_max, seed,
                               self.name)

    def with_rounds(self, total_rounds):
        return TcpScenarioSpec(self.flows, total_rounds, self.capacity_mbps,
                               self.packet_bytes, self.base_rtt, self.buffer,
                               self.c_max, self.seed, self.name)

    def describe(self):
        return '+'.join(f.controller.capitalize() for f in self.flows)

    def to_dict(self):
        d = {'version': self.version, 'capacity_mbps': self.capacity_mbps,
             'packet_bytes': self.packet_bytes, 'base_rtt': self.base_rtt,
             'c_max': self.c_max, 'total_rounds': self.total_rounds,
             'seed': self.seed, 'flows': [f.to_dict() for f in self.flows]}
        if self.buffer is not None:
            d['buffer'] = self.buffer
        if self.name is not None:
            d['name'] = self.name
        return d


def check_tcp_scenario(spec):
    if spec.capacity_mbps <= 0:
        raise InvalidSpecError('capacity_mbps', 'must be > 0')
    if spec.packet_bytes < 1:
        raise InvalidSpecError('packet_bytes', 'must be >= 1')
    if spec.base_rtt <= 0:
        raise InvalidSpecError('base_rtt', 'must be > 0')
    if spec.buffer is not None and spec.buffer < 0:
        raise InvalidSpecError('buffer', 'must be >= 0')
    if spec.c_max < 1:
        raise InvalidSpecError('c_max', 'must be >= 1')
    if spec.total_rounds < 1:
        raise InvalidSpecError('total_rounds', 'must be >= 1')
    _check_seed(spec.seed)
    if not spec.flows:
        raise InvalidSpecError('flows', 'at least one flow is required')
    seen = set()
    for i, f in enumerate(spec.flows):
        path = 'flows[{}]'.format(i)
        if f.id in seen:
            raise InvalidSpecError(path + '.id', 'duplicate id {}'.format(f.id))
        seen.add(f.id)
        if f.controller not in ('reno', 'vegas', 'agent'):
            raise InvalidSpecError(path + '.controller',
                                   'unknown controller {!r}'.format(
                                       f.controller))
        if not 1 <= f.init_cwnd <= spec.c_max:
            raise InvalidSpecError(path + '.init_cwnd',
                                   'must lie in [1, c_max]')
        if f.start_round < 0:
            raise InvalidSpecError(path + '.start_round', 'must be >= 0')
        if f.stop_round is not None and f.stop_round <= f.start_round:
            raise InvalidSpecError(path + '.stop_round',
                                   'must be greater than start_round')
