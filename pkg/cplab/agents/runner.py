"""Play strategies in simulation at query-period cadence."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import DomainMismatchError, PreconditionError
from ..metrics import clamped_alpha_fair_value, slot_utilization
from ..simulation import get_world
from ..simulation.mac_world import vector_policy
from ..simulation.tcp_world import fixed_cwnd_policy
from ..strategy.dsl import Explore
from ..strategy.interpreter import ActionContext, interpret_action
from .observer import collision_rate, recent_event, rtt_inflation

logger = logging.getLogger(__name__)


def period_rng(seed, agent_id, period):
    """Perturbation stream of one agent in one query period."""
    return np.random.default_rng([seed % 2 ** 64, agent_id, period])


def agents_in_range(spec, start, end):
    """Agent ids live at some frame (or round) of [start, end)."""
    out = []
    if spec.family == 'mac':
        for n in spec.nodes:
            if n.is_agent and n.join_frame < end and (
                    n.leave_frame is None or n.leave_frame > start):
                out.append(n.id)
    else:
        for f in spec.flows:
            if f.is_agent and f.start_round < end and (
                    f.stop_round is None or f.stop_round > start):
                out.append(f.id)
    return sorted(out)


def mac_signals(log, config, agent_id, period_frames):
    """Trigger inputs measured on the trajectory so far (no rng)."""
    if log.n_frames == 0:
        return ActionContext()
    window = min(config.window_frames, log.n_frames)
    end = log.first_frame + log.n_frames
    return ActionContext(
        utilization=slot_utilization(log, window, (agent_id,)),
        env_changed=recent_event(log, end - period_frames),
        collision_rate=collision_rate(log, period_frames))


def tcp_signals(log, config, c_max, period_rounds):
    if len(log) == 0:
        return ActionContext(c_max=c_max)
    last = log.tail(period_rounds + 1).records
    sets = {}
    for r in last:
        sets.setdefault(r.round_index, set()).add(r.flow_id)
    ordered = [sets[k] for k in sorted(sets)]
    changed = any(a != b for a, b in zip(ordered[:-1], ordered[1:]))
    return ActionContext(env_changed=changed,
                         rtt_inflation=rtt_inflation(log, period_rounds),
                         c_max=c_max)


def run_mac(spec, config, decide, beta=0.5, world=None):
    """Simulate a MAC scenario, asking `decide` for every agent each period.

    Args:
        decide: callable (world, agent_id, period, period_frames) -> policy
            vector held for the whole period.

    Returns:
        the MacWorld after the last frame.
    """
    world = world or get_world(spec, beta=beta)
    period_frames = config.period_frames(spec.frame_len)
    period = 0
    while not world.done:
        start = world.frame
        n = min(period_frames, spec.total_frames - start)
        vectors = {aid: np.asarray(decide(world, aid, period, period_frames),
                                   dtype=float)
                   for aid in agents_in_range(spec, start, start + n)}
        world.run_frames(vector_policy(vectors), n)
        period += 1
    return world


def run_tcp(spec, config, decide, beta=0.5, world=None):
    """TCP counterpart of run_mac; `decide` returns the cwnd of the period."""
    world = world or get_world(spec, beta=beta)
    period_rounds = config.tcp_query_rounds
    period = 0
    while not world.done:
        start = world.round
        n = min(period_rounds, spec.total_rounds - start)
        cwnds = {aid: int(decide(world, aid, period, period_rounds))
                 for aid in agents_in_range(spec, start, start + n)}
        world.run_rounds(fixed_cwnd_policy(cwnds), n)
        period += 1
    return world


def strategy_player(strategy, config, seed, c_max=64):
    """`decide` callable following one strategy on every agent."""
    def decide(world, agent_id, period, period_len):
        if strategy.is_mac:
            ctx = mac_signals(world.log, config, agent_id, period_len)
        else:
            ctx = tcp_signals(world.log, config, c_max, period_len)
        ctx.rng = period_rng(seed, agent_id, period)
        return interpret_action(strategy, ctx)
    return decide


def mac_objective(log, alpha=1.0, floor=1e-3):
    """Clamped alpha-fair value of per-node success rates over the last half."""
    half = log.tail(log.n_frames - log.n_frames // 2)
    if half.n_frames == 0:
        raise PreconditionError('episode has no complete frame')
    rates = half.frame_successes().sum(axis=0) / (half.n_frames * half.frame_len)
    return clamped_alpha_fair_value(rates, alpha, floor)


def tcp_objective(log):
    """Mean per-round sum of the rewards of the active flows, last half."""
    half = log.tail(log.n_rounds - log.n_rounds // 2)
    per_round = {}
    for r in half.records:
        per_round[r.round_index] = per_round.get(r.round_index, 0.0) + r.reward
    if not per_round:
        raise PreconditionError('episode has no round')
    return float(np.mean(list(per_round.values())))


def play_episodes(s, scenario, config, episodes=None, seed=None):
    """Objective and final log of every evaluation episode of `s`.

    Exploration is off; episode e runs with seed `(seed + e) mod 2**64`.
    """
    if (s.domain == 'MAC') != (scenario.family == 'mac'):
        raise DomainMismatchError('{} strategy on a {} scenario'.format(
            s.domain, scenario.family.upper()))
    episodes = config.eval_episodes if episodes is None else episodes
    if episodes < 1:
        raise PreconditionError('episodes must be >= 1')
    seed = scenario.seed if seed is None else seed
    quiet = s.replace(explore=Explore())
    values, logs = [], []
    for e in range(episodes):
        episode_seed = (seed + e) % 2 ** 64
        if scenario.family == 'mac':
            spec = scenario.with_frames(config.eval_frames).with_seed(
                episode_seed)
            world = run_mac(spec, config,
                            strategy_player(quiet, config, episode_seed),
                            config.tcp_beta)
            values.append(mac_objective(world.log, config.alpha,
                                        config.throughput_floor))
        else:
            spec = scenario.with_rounds(config.eval_rounds).with_seed(
                episode_seed)
            world = run_tcp(spec, config,
                            strategy_player(quiet, config, episode_seed,
                                            spec.c_max),
                            config.tcp_beta)
            values.append(tcp_objective(world.log))
        logs.append(world.log)
    return values, logs


def evaluate_strategy(s, scenario, config, episodes=None, seed=None):
    """Mean objective of `s` over evaluation episodes with exploration off."""
    values, _ = play_episodes(s, scenario, config, episodes, seed)
    j = float(np.mean(values))
    logger.debug('Strategy %s scored J=%.6f over %d episode(s)', s.id, j,
                 len(values))
    return j
