"""
Deterministic rule-based backend

Every response is a pure function of the request text. The heuristics:

  strategy-gen      uniform level at the action with the highest reward over
                    every demonstration, the first maximum on ties
  reflection        avoidance of slots other nodes occupy in nearly every
                    frame, with the level moved to the best-observed level:
                    the fair share of the capacity left by scheduled nodes
  node-decision     keep the previous strategy unless the observer reports a
                    change or a newly overused slot, then redo the fair share
  observer-summary  plain restatement of the report
  judge             higher estimated objective, first candidate on ties
  psa-conflict      same behavior is redundant; a different base action or an
                    opposing effect on the same trigger makes the older
                    strategy obsolete
"""

from __future__ import annotations

import json
import logging
import math

from ..errors import PreconditionError, UnrecognizedTemplateError
from ..strategy.dsl import strategy_from_dict
from .base_backend import Backend
from .prompts import (block_json, blocks, indexed_blocks, template_of,
                      to_json)

logger = logging.getLogger(__name__)

LEVEL_DIGITS = 4


def _strategy_doc(domain, base, rules=(), sigma=0.0, provenance='generated'):
    return {'schema': 'strategy-v1', 'domain': domain, 'base_action': base,
            'rules': list(rules), 'explore': {'epsilon': 0.0, 'sigma': sigma},
            'provenance': provenance}


def _items(text):
    out = []
    for raw in blocks(text, 'item'):
        try:
            out.append(json.loads(raw))
        except ValueError:
            continue
    return out


def _clip_cwnd(value, c_max):
    return int(min(max(int(round(value)), 1), c_max))


def avoid_rule(slots, threshold):
    slots = sorted(slots)
    return {'trigger': {'name': 'slot_utilization', 'at_least': threshold,
                        'slots': slots},
            'effect': {'name': 'avoid_slots', 'slots': slots}}


def fair_share(nodes, live_ids, agent_id, overused):
    """1 / (1 + contenders) where scheduled nodes do not contend.

    A node is scheduled when it succeeded at least once and only ever in
    overused slots.
    """
    overused = set(overused)
    contenders = 0
    for n in nodes:
        if n['node'] == agent_id or n['node'] not in live_ids:
            continue
        slots = set(n.get('success_slots', ()))
        if slots and slots <= overused:
            continue
        contenders += 1
    return 1.0 / (1 + contenders)


def _mac_fair_strategy(settings, nodes, live_ids, overused, provenance):
    level = fair_share(nodes, live_ids, settings['agent_id'], overused)
    rules = [avoid_rule(overused, settings['theta_hi'])] if overused else []
    return _strategy_doc('MAC', [level] * settings['frame_len'], rules,
                         settings['sigma'], provenance)


def _tcp_fair_strategy(settings, flows, provenance):
    acks = [f['mean_acks'] for f in flows if f.get('active', True)]
    cwnd = _clip_cwnd(math.fsum(acks) / len(acks), settings['c_max'])
    return _strategy_doc('TCP', cwnd, (), settings['sigma'], provenance)


class ScriptedBackend(Backend):
    """Reference heuristics keyed on the prompt template."""

    name = 'scripted'

    def __init__(self, transcript=None):
        super().__init__(transcript)
        self._handlers = {
            'strategy-gen': self._strategy_gen,
            'reflection': self._reflection,
            'observer-summary': self._observer_summary,
            'node-decision': self._node_decision,
            'judge': self._judge,
            'psa-conflict': self._psa_conflict,
        }

    def _complete(self, request):
        text = request.prompt_text()
        found = template_of(text)
        if found is None or found[0] not in self._handlers:
            raise UnrecognizedTemplateError(
                'prompt matches no known template: {}'.format(
                    found[0] if found else 'no header'))
        return to_json(self._handlers[found[0]](text))

    def _strategy_gen(self, text):
        settings = block_json(text, 'settings')
        tuples = [t for demo in _items(text) for t in demo.get('tuples', [])]
        if not tuples:
            raise PreconditionError('strategy-gen prompt carries no '
                                    'demonstrations')
        # first maximum wins
        best = max(tuples, key=lambda t: t['r'])['a']
        if settings['family'] == 'tcp':
            base = _clip_cwnd(best, settings['c_max'])
            return _strategy_doc('TCP', base, (), settings['sigma'])
        level = round(float(best), LEVEL_DIGITS)
        return _strategy_doc('MAC', [level] * settings['frame_len'], (),
                             settings['sigma'])

    def _reflection(self, text):
        settings = block_json(text, 'settings')
        episode = block_json(text, 'episode')
        nodes = _items(text)
        if settings['family'] == 'tcp':
            return _tcp_fair_strategy(settings, nodes, 'refined')
        return _mac_fair_strategy(settings, nodes, set(episode['live_ids']),
                                  episode.get('overused', []), 'refined')

    def _observer_summary(self, text):
        report = block_json(text, 'report') or {}
        parts = []
        if report.get('converged'):
            parts.append('Action converged.')
        if report.get('env_changed'):
            parts.append('Environment changed.')
        overused = report.get('overused', [])
        if overused:
            parts.append('Slots {} overused.'.format(
                ','.join(str(s) for s in overused)))
        unused = report.get('unused', [])
        if unused:
            parts.append('Slots {} unused.'.format(
                ','.join(str(s) for s in unused)))
        return {'summary': ' '.join(parts) or 'Nothing notable.'}

    def _node_decision(self, text):
        settings = block_json(text, 'settings')
        report = block_json(text, 'report')
        previous = block_json(text, 'previous')
        if previous is None:
            memory = sorted(_items(text), key=lambda s: s.get('rank', 0))
            previous = memory[-1]['strategy']
        if report is None:
            return previous
        traj = block_json(text, 'trajectory')
        if settings['family'] == 'tcp':
            if report.get('env_changed'):
                return _tcp_fair_strategy(settings, traj['flows'], 'refined')
            return previous
        avoided = set()
        for rule in strategy_from_dict(previous).rules:
            if rule.effect.name == 'avoid_slots':
                avoided.update(rule.effect.slots)
        overused = set(report.get('overused', []))
        if report.get('env_changed') or not overused <= avoided:
            return _mac_fair_strategy(settings, traj['nodes'],
                                      set(traj['live_ids']), overused,
                                      'refined')
        return previous

    def _judge(self, text):
        estimates = {}
        for idx, raw in indexed_blocks(text, 'estimate').items():
            try:
                estimates[idx] = float(raw)
            except ValueError:
                estimates[idx] = None
        first, second = estimates.get(1), estimates.get(2)
        if first is not None and second is not None and second > first:
            return {'choice': 2,
                    'rationale': 'candidate 2 has the higher estimate '
                                 '({:.4f} > {:.4f})'.format(second, first)}
        return {'choice': 1,
                'rationale': 'candidate 1 is not worse than candidate 2'}

    def _psa_conflict(self, text):
        new = block_json(text, 'new')
        new_rules = [(json.dumps(r['trigger'], sort_keys=True),
                      json.dumps(r['effect'], sort_keys=True))
                     for r in new['strategy']['rules']]
        obsolete = []
        for item in _items(text):
            old = item['strategy']
            if (old['domain'], old['base_action'], old['rules']) == (
                    new['strategy']['domain'], new['strategy']['base_action'],
                    new['strategy']['rules']):
                return {'redundant': True, 'obsolete': [],
                        'reason': 'same behavior as {}'.format(item['id'])}
            if old['base_action'] != new['strategy']['base_action']:
                obsolete.append(item['id'])
                continue
            for r in old['rules']:
                trig = json.dumps(r['trigger'], sort_keys=True)
                eff = json.dumps(r['effect'], sort_keys=True)
                if any(t == trig and e != eff for t, e in new_rules):
                    obsolete.append(item['id'])
                    break
        reason = ('replaces ' + ', '.join(obsolete)) if obsolete else \
            'no conflict'
        return {'redundant': False, 'obsolete': obsolete, 'reason': reason}
