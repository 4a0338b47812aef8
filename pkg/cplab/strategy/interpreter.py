"""Turn a strategy and the observed signals into a concrete action."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from ..errors import PreconditionError

RESET_EPSILON = 0.1


@dataclass
class ActionContext:
    """Signals the rule triggers read, plus the perturbation stream."""

    utilization: Optional[np.ndarray] = None
    env_changed: bool = False
    collision_rate: float = 0.0
    rtt_inflation: float = 0.0
    rng: Any = None
    c_max: int = 64


def _slots_or_all(trigger, utilization):
    if trigger.slots:
        return utilization[list(trigger.slots)]
    return utilization


def trigger_fires(trigger, ctx):
    if trigger.name == 'env_change':
        return bool(ctx.env_changed)
    if trigger.name == 'collision_rate':
        return ctx.collision_rate >= trigger.at_least
    if trigger.name == 'rtt_inflation':
        return ctx.rtt_inflation >= trigger.at_least
    if ctx.utilization is None:
        return False
    values = _slots_or_all(trigger, np.asarray(ctx.utilization))
    if trigger.name == 'slot_utilization':
        hit = values >= trigger.at_least
    elif trigger.name == 'slot_unused':
        hit = values == 0
    else:
        raise ValueError('Unrecognized trigger {}'.format(trigger.name))
    # listed slots must all qualify; an unlisted trigger needs any slot
    return bool(hit.all()) if trigger.slots else bool(hit.any())


def fired_rules(s, ctx):
    """(index, rule) of every rule whose trigger holds under ctx."""
    return [(i, r) for i, r in enumerate(s.rules) if trigger_fires(r.trigger, ctx)]


def _need_rng(ctx):
    if ctx.rng is None:
        raise PreconditionError('exploring strategy needs ctx.rng')
    return ctx.rng


def _mac_action(s, ctx):
    v = s.base_vector()
    avoided = np.zeros(len(v), dtype=bool)
    eps = s.explore.epsilon
    for _, rule in fired_rules(s, ctx):
        e = rule.effect
        if e.name == 'set_slot_prob':
            v[e.slot] = e.prob
            avoided[e.slot] = False
        elif e.name == 'scale_all':
            v = v * e.factor
        elif e.name == 'avoid_slots':
            v[list(e.slots)] = 0.0
            avoided[list(e.slots)] = True
        elif e.name == 'reset_exploration':
            eps = max(eps, RESET_EPSILON)
    v = np.clip(v, 0.0, 1.0)
    if eps > 0 and _need_rng(ctx).random() < eps:
        v = ctx.rng.random(len(v))
    if s.explore.sigma > 0:
        v = v + _need_rng(ctx).normal(0.0, s.explore.sigma, len(v))
    v[avoided] = 0.0
    return np.clip(v, 0.0, 1.0)


def _tcp_action(s, ctx):
    cwnd = float(s.base_action)
    eps = s.explore.epsilon
    for _, rule in fired_rules(s, ctx):
        e = rule.effect
        if e.name == 'adjust_cwnd':
            cwnd += e.delta
        elif e.name == 'reset_exploration':
            eps = max(eps, RESET_EPSILON)
    cwnd = min(max(cwnd, 1.0), ctx.c_max)
    if eps > 0 and _need_rng(ctx).random() < eps:
        cwnd = float(ctx.rng.integers(1, ctx.c_max + 1))
    if s.explore.sigma > 0:
        cwnd *= 1.0 + _need_rng(ctx).normal(0.0, s.explore.sigma)
    return int(min(max(round(cwnd), 1), ctx.c_max))


def interpret_action(s, ctx):
    """Base action, then fired rules in order, then exploration, then clip.

    Returns a probability vector for MAC strategies and an integer cwnd
    for TCP strategies. Avoided slots stay at zero through exploration.
    """
    if s.is_mac:
        return _mac_action(s, ctx)
    return _tcp_action(s, ctx)
