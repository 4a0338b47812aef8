"""Per-slot and per-round logs produced by the simulators."""

from __future__ import annotations

import bisect
import enum
import operator
from typing import NamedTuple, Optional, Tuple

import numpy as np


class SlotOutcome(enum.Enum):
    SUCCESS = 'S'
    COLLIDED = 'C'
    IDLE = 'I'

    @classmethod
    def from_count(cls, n_transmitters):
        if n_transmitters == 0:
            return cls.IDLE
        elif n_transmitters == 1:
            return cls.SUCCESS
        return cls.COLLIDED


OUTCOME_ORDER = (SlotOutcome.SUCCESS, SlotOutcome.COLLIDED, SlotOutcome.IDLE)


class SlotResult(NamedTuple):
    slot_index: int
    frame_index: int
    frame_position: int
    live_ids: Tuple[int, ...]
    transmitters: Tuple[int, ...]
    outcome: SlotOutcome
    reward_vector: Tuple[int, ...]


class TrajectoryRecord(NamedTuple):
    """What one agent node sees of one slot."""

    node_id: int
    slot_index: int
    frame_position: int
    agent_action_prob: float
    agent_transmitted: bool
    outcome: SlotOutcome
    reward_vector: Tuple[int, ...]
    live_ids: Tuple[int, ...]


class TrajectoryLog:
    """Append-only slot log of one MAC run."""

    def __init__(self, frame_len, slots=None, records=None, events=None):
        self._frame_len = frame_len
        self._slots = [] if slots is None else slots
        self._records = [] if records is None else records
        # (frame_index, live_ids) at every population change
        self._events = [] if events is None else events

    def append(self, result, records=()):
        self._slots.append(result)
        self._records.extend(records)

    def mark_event(self, frame_index, live_ids):
        self._events.append((frame_index, tuple(live_ids)))

    def __len__(self):
        return len(self._slots)

    @property
    def frame_len(self):
        return self._frame_len

    @property
    def slots(self):
        return self._slots

    @property
    def records(self):
        return self._records

    @property
    def events(self):
        return list(self._events)

    @property
    def n_frames(self):
        return len(self._slots) // self._frame_len

    @property
    def first_frame(self):
        return self._slots[0].frame_index if self._slots else 0

    def tail(self, n_frames):
        """The last `n_frames` complete frames as a new log."""
        n_frames = min(n_frames, self.n_frames)
        end = self.n_frames * self._frame_len
        start = end - n_frames * self._frame_len
        slots = self._slots[start:end]
        if not slots:
            return TrajectoryLog(self._frame_len)
        lo, hi = slots[0].slot_index, slots[-1].slot_index
        # records are appended in slot order
        key = operator.attrgetter('slot_index')
        records = self._records[
            bisect.bisect_left(self._records, lo, key=key):
            bisect.bisect_right(self._records, hi, key=key)]
        first = slots[0].frame_index
        events = [e for e in self._events if e[0] >= first]
        return TrajectoryLog(self._frame_len, slots, records, events)

    def node_ids(self):
        ids = set()
        for live in {s.live_ids for s in self._slots}:
            ids.update(live)
        return tuple(sorted(ids))

    def frame_successes(self, node_ids=None):
        """Successes per complete frame and node, shape (n_frames, n_nodes)."""
        if node_ids is None:
            node_ids = self.node_ids()
        column = {n: i for i, n in enumerate(node_ids)}
        out = np.zeros((self.n_frames, len(node_ids)))
        first = self.first_frame
        for s in self._slots[:self.n_frames * self._frame_len]:
            if s.outcome is SlotOutcome.SUCCESS:
                winner = s.transmitters[0]
                if winner in column:
                    out[s.frame_index - first, column[winner]] += 1
        return out

    def busy(self, exclude=()):
        """Per complete frame and position: did a non-excluded node transmit."""
        exclude = set(exclude)
        out = np.zeros((self.n_frames, self._frame_len), dtype=bool)
        first = self.first_frame
        for s in self._slots[:self.n_frames * self._frame_len]:
            for n in s.transmitters:
                if n not in exclude:
                    out[s.frame_index - first, s.frame_position] = True
                    break
        return out

    def outcome_rates(self, start=0, end=None):
        """Fractions of SUCCESS, COLLIDED, IDLE over slots [start, end)."""
        slots = self._slots[start:end]
        if not slots:
            return np.zeros(3)
        counts = np.zeros(3)
        for s in slots:
            counts[OUTCOME_ORDER.index(s.outcome)] += 1
        return counts / len(slots)


class RoundFeedback(NamedTuple):
    acks: float
    rtt: float
    loss: bool
    drops: float
    reward: float
    floored: bool = False


class RoundRecord(NamedTuple):
    round_index: int
    flow_id: int
    cwnd: float
    acks: float
    rtt: float
    loss: bool
    drops: float
    reward: float


class TcpLog:
    """Append-only round log of one TCP run."""

    def __init__(self, packet_bytes, base_rtt, records=None):
        self._packet_bytes = packet_bytes
        self._base_rtt = base_rtt
        self._records = [] if records is None else records

    def extend(self, records):
        self._records.extend(records)

    def __len__(self):
        return len(self._records)

    @property
    def records(self):
        return self._records

    @property
    def packet_bytes(self):
        return self._packet_bytes

    @property
    def base_rtt(self):
        return self._base_rtt

    @property
    def n_rounds(self):
        if not self._records:
            return 0
        return self._records[-1].round_index - self._records[0].round_index + 1

    def tail(self, n_rounds):
        if not self._records:
            return TcpLog(self._packet_bytes, self._base_rtt)
        last = self._records[-1].round_index
        records = [r for r in self._records if r.round_index > last - n_rounds]
        return TcpLog(self._packet_bytes, self._base_rtt, records)

    def throughput_kbps(self, flow_id: Optional[int] = None):
        """Per-round throughput acks/rtt in kbit/s, keyed by flow id."""
        out = {}
        for r in self._records:
            if flow_id is not None and r.flow_id != flow_id:
                continue
            kbps = r.acks / r.rtt * 8.0 * self._packet_bytes / 1000.0
            out.setdefault(r.flow_id, []).append((r.round_index, kbps))
        return out
