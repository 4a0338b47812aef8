"""Agent and experiment defaults."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from typing import Optional

from .errors import InvalidSpecError, MissingArtifactError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentConfig:
    # query period, in slots (MAC) and rounds (TCP)
    query_period: int = 100
    tcp_query_rounds: int = 10
    # observer
    converge_eps: float = 0.02
    converge_k: int = 3
    shift_delta: float = 0.1
    theta_hi: float = 0.9
    window_frames: int = 100
    tcp_window_rounds: int = 100
    # exploration
    sigma: float = 0.05
    escape_sigma: float = 0.1
    # offline loop
    j_opt_fraction: float = 0.95
    j_target: Optional[float] = None
    n_max: int = 5
    asi_retries: int = 3
    demo_k: int = 8
    demo_frames: int = 200
    demo_rounds: int = 200
    eval_frames: int = 500
    eval_rounds: int = 400
    eval_episodes: int = 1
    # objectives
    alpha: float = 1.0
    tcp_beta: float = 0.5
    throughput_floor: float = 1e-3
    # ranker
    ranker_offline: bool = True
    ranker_online: bool = False
    # ablation switches
    observer_enabled: bool = True
    strategy_enabled: bool = True
    tracing: bool = True
    # metrics
    rmse_window: int = 100
    rmse_warmup: int = 500

    def __post_init__(self):
        positive = ('query_period', 'tcp_query_rounds', 'converge_k',
                    'window_frames', 'tcp_window_rounds', 'asi_retries',
                    'demo_k', 'demo_frames', 'demo_rounds', 'eval_frames',
                    'eval_rounds', 'eval_episodes', 'rmse_window')
        for name in positive:
            if getattr(self, name) < 1:
                raise InvalidSpecError(name, 'must be >= 1')
        for name in ('sigma', 'escape_sigma', 'converge_eps', 'shift_delta',
                     'tcp_beta', 'rmse_warmup', 'n_max'):
            if getattr(self, name) < 0:
                raise InvalidSpecError(name, 'must be >= 0')
        if not 0.0 <= self.theta_hi <= 1.0:
            raise InvalidSpecError('theta_hi', 'must lie in [0, 1]')
        if not 0.0 < self.j_opt_fraction <= 1.0:
            raise InvalidSpecError('j_opt_fraction', 'must lie in (0, 1]')
        if self.throughput_floor <= 0:
            raise InvalidSpecError('throughput_floor', 'must be > 0')

    def period_frames(self, frame_len):
        """Query period expressed in whole frames."""
        if self.query_period % frame_len:
            raise InvalidSpecError(
                'query_period',
                'must be a multiple of frame_len {}'.format(frame_len))
        return self.query_period // frame_len

    def replace(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InvalidSpecError(unknown[0], 'unknown config key')
        return cls(**d)


def load_config(path=None):
    """Load agent defaults from a JSON file, or return the defaults."""
    if path is None:
        return AgentConfig()
    try:
        with open(path) as f:
            d = json.load(f)
    except FileNotFoundError:
        raise MissingArtifactError(path, 'config file not found')
    except json.JSONDecodeError as e:
        raise InvalidSpecError(str(path), 'invalid JSON ({})'.format(e))
    if 'agent_config' in d:
        # config.json snapshot of an earlier run
        d = d['agent_config']
    logger.info('Loaded agent config from %s', path)
    return AgentConfig.from_dict(d)
