"""
Ideal policies of a fully informed agent against ALOHA/TDMA populations
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Tuple

import numpy as np

from .errors import UnsupportedPopulationError
from .metrics import ThroughputSeries, alpha_fair_value

logger = logging.getLogger(__name__)

OBJECTIVE_FLOOR = 1e-9
STEP_START = 0.1
STEP_MIN = 1e-3
# ascent moves smaller than this do not count as improvements
IMPROVE_TOL = 1e-12
START_TOL = 1e-9


@dataclass(frozen=True)
class Population:
    """Who shares the channel: ALOHA (id, q), TDMA (id, slots), agent ids."""

    frame_len: int = 10
    aloha: Tuple[Tuple[int, float], ...] = ()
    tdma: Tuple[Tuple[int, FrozenSet[int]], ...] = ()
    agents: Tuple[int, ...] = ()

    @classmethod
    def build(cls, aloha=(), tdma=(), agents=1, frame_len=10):
        """Population with ids assigned in order: ALOHA, TDMA, then agents."""
        nid = 0
        a = []
        for q in aloha:
            a.append((nid, float(q)))
            nid += 1
        t = []
        for slots in tdma:
            t.append((nid, frozenset(slots)))
            nid += 1
        return cls(frame_len, tuple(a), tuple(t),
                   tuple(range(nid, nid + agents)))

    @classmethod
    def from_scenario(cls, spec, frame=0, segment=None):
        """Population live at `frame`; complex protocol kinds are refused."""
        a, t, g = [], [], []
        for nid in spec.live_ids(frame):
            n = spec.node_map[nid]
            if n.kind == 'aloha':
                a.append((nid, n.q))
            elif n.kind == 'tdma':
                t.append((nid, frozenset(n.slots)))
            elif n.is_agent:
                g.append(nid)
            else:
                raise UnsupportedPopulationError(
                    'no ideal policy for {} nodes (node {})'.format(
                        n.kind, nid), segment=segment)
        return cls(spec.frame_len, tuple(a), tuple(t), tuple(g))

    @property
    def node_ids(self):
        return tuple(sorted([i for i, _ in self.aloha] +
                            [i for i, _ in self.tdma] + list(self.agents)))

    def tdma_count(self):
        count = np.zeros(self.frame_len)
        for _, slots in self.tdma:
            for s in slots:
                count[s] += 1
        return count


@dataclass(frozen=True)
class OraclePolicy:
    population: Population
    policies: Dict[int, Tuple[float, ...]]
    objective: float
    expected_throughputs: Dict[int, float]
    alpha: float = 1.0
    start_objectives: Tuple[float, ...] = field(default=())

    def vector(self, agent_id):
        return np.array(self.policies[agent_id])

    def to_dict(self):
        return {'alpha': self.alpha,
                'objective': self.objective,
                'policies': {str(k): list(v) for k, v in self.policies.items()},
                'expected_throughputs': {
                    str(k): v for k, v in self.expected_throughputs.items()},
                'start_objectives': list(self.start_objectives)}


def _policy_matrix(policies, pop):
    if isinstance(policies, dict):
        policies = [policies[i] for i in pop.agents]
    m = np.asarray(policies, dtype=float).reshape(len(pop.agents),
                                                  pop.frame_len)
    return m


def _throughput_array(p, pop):
    """Expected success rate per node in pop.node_ids order."""
    free = pop.tdma_count() == 0
    qs = np.array([q for _, q in pop.aloha])
    aloha_idle = np.prod(1.0 - qs) if qs.size else 1.0
    agent_idle = np.prod(1.0 - p, axis=0) if p.size else np.ones(pop.frame_len)

    out = {}
    for i, aid in enumerate(pop.agents):
        others = np.prod(np.delete(1.0 - p, i, axis=0), axis=0)
        out[aid] = np.mean(p[i] * others * aloha_idle * free)
    for j, (nid, q) in enumerate(pop.aloha):
        rest = np.prod(np.delete(1.0 - qs, j)) if qs.size > 1 else 1.0
        out[nid] = np.mean(q * rest * agent_idle * free)
    count = pop.tdma_count()
    for nid, slots in pop.tdma:
        own = np.zeros(pop.frame_len, dtype=bool)
        own[list(slots)] = True
        alone = own & (count == 1)
        out[nid] = np.mean(alone * aloha_idle * agent_idle)
    return np.array([out[n] for n in pop.node_ids])


def expected_throughputs(policies, pop):
    """Closed-form per-node throughput of the agents' per-slot policies.

    Args:
        policies: one vector of frame_len probabilities per agent, as a
            sequence aligned with pop.agents or a dict keyed by agent id.
        pop: Population.

    Returns:
        dict node id -> expected success rate.
    """
    x = _throughput_array(_policy_matrix(policies, pop), pop)
    return {n: float(v) for n, v in zip(pop.node_ids, x)}


def _objective(p, pop, alpha):
    x = np.maximum(_throughput_array(p, pop), OBJECTIVE_FLOOR)
    return alpha_fair_value(x, alpha)


def _starts(pop):
    n_agents = len(pop.agents)
    free = np.flatnonzero(pop.tdma_count() == 0)
    starts = [np.full((n_agents, pop.frame_len), 0.5),
              np.full((n_agents, pop.frame_len),
                      1.0 / (len(pop.aloha) + n_agents))]
    ones = np.zeros((n_agents, pop.frame_len))
    ones[:, free] = 1.0
    starts.append(ones)
    part = np.zeros((n_agents, pop.frame_len))
    for k, slot in enumerate(free):
        part[k % n_agents, slot] = 1.0
    starts.append(part)

    unique = []
    for s in starts:
        if not any(np.array_equal(s, u) for u in unique):
            unique.append(s)
    return unique


def _ascend(p, pop, alpha):
    p = p.copy()
    best = _objective(p, pop, alpha)
    step = STEP_START
    while step >= STEP_MIN:
        improved = True
        while improved:
            improved = False
            for i in range(p.shape[0]):
                for k in range(p.shape[1]):
                    old = p[i, k]
                    for cand in (min(old + step, 1.0), max(old - step, 0.0)):
                        if cand == old:
                            continue
                        p[i, k] = cand
                        val = _objective(p, pop, alpha)
                        if val > best + IMPROVE_TOL:
                            best, old, improved = val, cand, True
                            break
                        p[i, k] = old
        step /= 2.0
    # float drift near the corners of the box
    p = np.round(p, 9)
    return p, _objective(p, pop, alpha)


def solve_aware(pop, alpha=1.0):
    """Multi-start coordinate ascent over every agent's per-slot vector.

    All agents are optimized jointly, so homogeneous agents can settle on
    a slot partition.
    """
    if not pop.agents:
        raise UnsupportedPopulationError('population has no agent node')
    best_p, best_val = None, -np.inf
    start_vals = []
    for start in _starts(pop):
        start_vals.append(_objective(start, pop, alpha))
        p, val = _ascend(start, pop, alpha)
        if best_p is None or val > best_val + START_TOL:
            best_p, best_val = p, val
    x = expected_throughputs(best_p, pop)
    logger.debug('oracle objective %.6f for %d agents', best_val,
                 len(pop.agents))
    return OraclePolicy(
        population=pop,
        policies={aid: tuple(float(v) for v in best_p[i])
                  for i, aid in enumerate(pop.agents)},
        objective=float(best_val),
        expected_throughputs=x,
        alpha=alpha,
        start_objectives=tuple(float(v) for v in start_vals))


def solve_segments(spec, alpha=1.0):
    """One OraclePolicy per population segment of a MAC scenario."""
    out = []
    cache = {}
    for seg in spec.segments():
        pop = Population.from_scenario(spec, seg.start, segment=seg.index)
        if not pop.agents:
            out.append((seg, None))
            continue
        if pop not in cache:
            cache[pop] = solve_aware(pop, alpha)
        out.append((seg, cache[pop]))
    return out


def aware_trajectory(spec, alpha=1.0):
    """Piecewise-constant per-frame reference throughput of every node.

    Frame labels run 1..total_frames like the windowed throughput series;
    a node that is not live in a frame has no reference value (NaN).
    """
    segments = solve_segments(spec, alpha)
    node_ids = sorted({n for seg, _ in segments for n in seg.live_ids})
    column = {n: i for i, n in enumerate(node_ids)}
    values = np.full((spec.total_frames, len(node_ids)), np.nan)
    for seg, policy in segments:
        for nid in seg.live_ids:
            ref = policy.expected_throughputs[nid] if policy else np.nan
            values[seg.start:seg.end, column[nid]] = ref
    return ThroughputSeries(tuple(node_ids),
                            np.arange(1, spec.total_frames + 1), values)


def oracle_report(spec, alpha=1.0):
    """Structured report of the per-segment ideal policies."""
    rows = []
    for seg, policy in solve_segments(spec, alpha):
        row = {'segment': seg.index, 'start_frame': seg.start,
               'end_frame': seg.end, 'live_ids': list(seg.live_ids)}
        if policy is not None:
            row.update(policy.to_dict())
        rows.append(row)
    return {'scenario': spec.name or spec.describe(), 'alpha': alpha,
            'segments': rows,
            'caveat': 'policy class is per-slot probability vectors; '
                      'optimum found by multi-start coordinate ascent'}
