"""
Strategy types, parsing, validation and canonical serialization
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import StrategyParseError
from ..formats import Diagnostic, parse_element
from .schema import (DOMAIN_EFFECTS, DOMAIN_TRIGGERS, EFFECT_PARAMS, MAX_SCALE,
                     STRATEGY_VERSION, TRIGGER_PARAMS, strategy_root)


@dataclass(frozen=True)
class Trigger:
    name: str
    at_least: Optional[float] = None
    slots: Tuple[int, ...] = ()

    def to_dict(self):
        d = {'name': self.name}
        if self.at_least is not None:
            d['at_least'] = self.at_least
        if self.slots:
            d['slots'] = list(self.slots)
        return d

    def label(self):
        out = self.name
        if self.at_least is not None:
            out += '>={:g}'.format(self.at_least)
        if self.slots:
            out += '@' + ','.join(str(s) for s in self.slots)
        return out


@dataclass(frozen=True)
class Effect:
    name: str
    slot: Optional[int] = None
    prob: Optional[float] = None
    factor: Optional[float] = None
    slots: Tuple[int, ...] = ()
    delta: Optional[int] = None

    def to_dict(self):
        d = {'name': self.name}
        for key in ('slot', 'prob', 'factor', 'delta'):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.slots:
            d['slots'] = list(self.slots)
        return d

    def label(self):
        """`avoid_slots(3,5)`, `set_slot_prob(2,0.4)`, ..."""
        if self.name == 'avoid_slots':
            args = ','.join(str(s) for s in self.slots)
        elif self.name == 'set_slot_prob':
            args = '{},{:g}'.format(self.slot, self.prob)
        elif self.name == 'scale_all':
            args = '{:g}'.format(self.factor)
        elif self.name == 'adjust_cwnd':
            args = '{:+d}'.format(self.delta)
        else:
            args = ''
        return '{}({})'.format(self.name, args)


@dataclass(frozen=True)
class Rule:
    trigger: Trigger
    effect: Effect

    def to_dict(self):
        return {'trigger': self.trigger.to_dict(),
                'effect': self.effect.to_dict()}


@dataclass(frozen=True)
class Explore:
    epsilon: float = 0.0
    sigma: float = 0.0

    def to_dict(self):
        return {'epsilon': self.epsilon, 'sigma': self.sigma}


@dataclass(frozen=True)
class Strategy:
    """A base action plus ordered rules; immutable once built."""

    domain: str
    base_action: Union[Tuple[float, ...], int]
    rules: Tuple[Rule, ...] = ()
    explore: Explore = Explore()
    provenance: str = 'generated'

    @property
    def id(self):
        return strategy_id(self)

    @property
    def is_mac(self):
        return self.domain == 'MAC'

    def base_vector(self):
        return np.array(self.base_action, dtype=float)

    def behavior(self):
        """What the strategy does, independent of exploration and history."""
        return (self.domain, self.base_action, self.rules)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        base = list(self.base_action) if self.is_mac else self.base_action
        return {'schema': STRATEGY_VERSION,
                'domain': self.domain,
                'base_action': base,
                'rules': [r.to_dict() for r in self.rules],
                'explore': self.explore.to_dict(),
                'provenance': self.provenance}


def uniform_strategy(level, frame_len=10, **kwargs):
    return Strategy('MAC', tuple(float(level) for _ in range(frame_len)),
                    **kwargs)


def serialize_strategy(s):
    """Canonical text; key order is fixed and rule order is kept."""
    return json.dumps(s.to_dict(), sort_keys=True, separators=(',', ':'))


def strategy_id(s):
    return hashlib.sha256(serialize_strategy(s).encode('utf-8')).hexdigest()[:16]


def _syntax_diagnostic(e):
    return Diagnostic('syntax', '', e.msg, e.lineno, e.colno)


def _base_action(domain, value, diagnostics):
    if domain == 'MAC':
        ok = isinstance(value, list) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in value)
        if not ok:
            diagnostics.append(Diagnostic(
                'type', 'base_action', 'expected a list of probabilities'))
            return None
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or \
            (isinstance(value, float) and not value.is_integer()):
        diagnostics.append(Diagnostic('type', 'base_action',
                                      'expected an integer cwnd'))
        return None
    return int(value)


def strategy_from_dict(data):
    """Build a Strategy from a decoded document or raise StrategyParseError."""
    diagnostics = []
    descr = parse_element(strategy_root, data, '', diagnostics)
    if diagnostics:
        raise StrategyParseError(diagnostics)
    base = _base_action(descr['domain'], descr['base_action'], diagnostics)
    if diagnostics:
        raise StrategyParseError(diagnostics)
    rules = []
    for r in descr['rules']:
        t, e = r['trigger'], r['effect']
        rules.append(Rule(
            Trigger(t['name'], t['at_least'], tuple(t['slots'] or ())),
            Effect(e['name'], e['slot'], e['prob'], e['factor'],
                   tuple(e['slots'] or ()), e['delta'])))
    ex = descr['explore'] or {'epsilon': 0.0, 'sigma': 0.0}
    return Strategy(descr['domain'], base, tuple(rules),
                    Explore(ex['epsilon'], ex['sigma']), descr['provenance'])


def parse_strategy(text):
    """Parse strategy-v1 text; raises StrategyParseError with diagnostics."""
    if not text or not text.strip():
        raise StrategyParseError(
            [Diagnostic('syntax', '', 'empty strategy text', 1, 1)])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise StrategyParseError([_syntax_diagnostic(e)])
    return strategy_from_dict(data)


def _within(value, lo, hi=math.inf):
    """True when `value` is a finite number in [lo, hi]."""
    return math.isfinite(value) and lo <= value <= hi


def _check_slots(slots, frame_len, path, diagnostics):
    for s in slots:
        if not 0 <= s < frame_len:
            diagnostics.append(Diagnostic(
                'dangling-index', path,
                'slot {} outside [0, {})'.format(s, frame_len)))


def _check_params(names, obj, path, diagnostics):
    for p in names:
        value = getattr(obj, p)
        if value is None or value == ():
            diagnostics.append(Diagnostic(
                'missing', '{}.{}'.format(path, p),
                '{} needs {}'.format(obj.name, p)))
            return False
    return True


def _check_trigger(t, domain, frame_len, path, diagnostics):
    if t.name not in DOMAIN_TRIGGERS[domain]:
        diagnostics.append(Diagnostic(
            'domain', path + '.name',
            '{} is not observable in {}'.format(t.name, domain)))
        return
    if not _check_params(TRIGGER_PARAMS[t.name], t, path, diagnostics):
        return
    if t.name in ('slot_utilization', 'collision_rate') and \
            not _within(t.at_least, 0.0, 1.0):
        diagnostics.append(Diagnostic('range', path + '.at_least',
                                      'threshold outside [0, 1]'))
    if t.name == 'rtt_inflation' and not _within(t.at_least, 0.0):
        diagnostics.append(Diagnostic('range', path + '.at_least',
                                      'threshold must be finite and >= 0'))
    if t.slots and domain == 'MAC':
        _check_slots(t.slots, frame_len, path + '.slots', diagnostics)


def _check_effect(e, domain, frame_len, c_max, path, diagnostics):
    if e.name not in DOMAIN_EFFECTS[domain]:
        diagnostics.append(Diagnostic(
            'domain', path + '.name',
            '{} does not act in {}'.format(e.name, domain)))
        return
    if not _check_params(EFFECT_PARAMS[e.name], e, path, diagnostics):
        return
    if e.name == 'set_slot_prob':
        _check_slots((e.slot,), frame_len, path + '.slot', diagnostics)
        if not _within(e.prob, 0.0, 1.0):
            diagnostics.append(Diagnostic(
                'range', path + '.prob',
                'probability {:g} at slot {} outside [0, 1]'.format(
                    e.prob, e.slot)))
    elif e.name == 'scale_all' and not _within(e.factor, 0.0, MAX_SCALE):
        diagnostics.append(Diagnostic(
            'range', path + '.factor',
            'factor outside [0, {:g}]'.format(MAX_SCALE)))
    elif e.name == 'avoid_slots':
        _check_slots(e.slots, frame_len, path + '.slots', diagnostics)
    elif e.name == 'adjust_cwnd' and not -c_max <= e.delta <= c_max:
        diagnostics.append(Diagnostic(
            'range', path + '.delta',
            'delta outside [-{0}, {0}]'.format(c_max)))


def validate_strategy(s, frame_len=10, c_max=64, domain=None):
    """Every problem with `s` in an environment; empty when it is valid."""
    diagnostics = []
    if domain is not None and s.domain != domain:
        diagnostics.append(Diagnostic(
            'domain', 'domain',
            'strategy acts in {} but the environment is {}'.format(
                s.domain, domain)))
        return diagnostics
    if s.is_mac:
        if len(s.base_action) != frame_len:
            diagnostics.append(Diagnostic(
                'length', 'base_action',
                'expected {} probabilities, got {}'.format(
                    frame_len, len(s.base_action))))
        for k, p in enumerate(s.base_action):
            if not _within(p, 0.0, 1.0):
                diagnostics.append(Diagnostic(
                    'range', 'base_action.{}'.format(k),
                    'probability {:g} at slot {} outside [0, 1]'.format(p, k)))
    elif not 1 <= s.base_action <= c_max:
        diagnostics.append(Diagnostic(
            'range', 'base_action',
            'cwnd {} outside [1, {}]'.format(s.base_action, c_max)))
    for i, r in enumerate(s.rules):
        path = 'rules.{}'.format(i)
        _check_trigger(r.trigger, s.domain, frame_len, path + '.trigger',
                       diagnostics)
        _check_effect(r.effect, s.domain, frame_len, c_max, path + '.effect',
                      diagnostics)
    if not _within(s.explore.epsilon, 0.0, 1.0):
        diagnostics.append(Diagnostic('range', 'explore.epsilon',
                                      'epsilon outside [0, 1]'))
    if not _within(s.explore.sigma, 0.0):
        diagnostics.append(Diagnostic('range', 'explore.sigma',
                                      'sigma must be finite and >= 0'))
    return diagnostics
