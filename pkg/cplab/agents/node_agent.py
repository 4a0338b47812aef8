"""Node agent: picks the strategy of each query period and acts on it."""

from __future__ import annotations

import copy
import logging
from typing import Any, NamedTuple, Optional

import numpy as np

from ..errors import BackendError, JudgeIndecisionError
from ..llm.prompts import render
from ..llm.ranker import RankerQuery, ranked_complete
from ..strategy.dsl import Explore
from ..strategy.interpreter import fired_rules, interpret_action

logger = logging.getLogger(__name__)


class Decision(NamedTuple):
    strategy: Any
    action: Any
    decided: Any
    label: str
    escape: bool = False
    fallback: bool = False
    reason: Optional[str] = None


def rule_label(strategy, ctx):
    fired = fired_rules(strategy, ctx)
    if not fired:
        return 'base action'
    return '; '.join('{} when {}'.format(r.effect.label(), r.trigger.label())
                     for _, r in fired)


def action_label(action):
    if isinstance(action, (int, np.integer)):
        return 'cwnd {}'.format(int(action))
    return '[{}]'.format(', '.join('{:.1f}'.format(v) for v in action))


def escape_strategy(strategy, escape_sigma):
    """Same behavior with exploration switched back on."""
    sigma = max(strategy.explore.sigma, escape_sigma)
    return strategy.replace(explore=Explore(strategy.explore.epsilon, sigma),
                            provenance='escape')


class NodeAgent(object):

    def __init__(self, backend, assistant, settings, escape_sigma=0.1,
                 ranker=False, judge_backend=None):
        self._backend = backend
        self._assistant = assistant
        self._settings = dict(settings)
        self._escape_sigma = escape_sigma
        self._ranker = ranker
        self._judge_backend = judge_backend

    def choose_strategy(self, pset, previous, trajectory, report):
        """Strategy for the next period according to the backend."""
        fields = {'settings': self._settings,
                  'previous': previous.to_dict() if previous else None,
                  'trajectory': trajectory,
                  'report': report.to_dict() if report else None,
                  'summary': (report.summary or '') if report else ''}
        items = pset.memory_items()
        if self._ranker:
            base = render('node-decision', items=None,
                          request_tag='node-decision', **fields)
            query = RankerQuery(base, items)
            try:
                result = ranked_complete(query, self._backend,
                                         self._judge_backend, '',
                                         self._assistant.check)
                text = result.text
                request = query.first() if result.choice == 1 else \
                    query.second()
            except JudgeIndecisionError as e:
                logger.warning('%s; repairing the first candidate', e)
                text, request = e.candidates[0], query.first()
        else:
            request = render('node-decision', items=items,
                             request_tag='node-decision', **fields)
            text = self._backend.complete(request)
        strategy, _ = self._assistant.materialize(text, request)
        return strategy

    def online_decide(self, pset, previous, previous_action, trajectory,
                      report, ctx):
        """Action held for the next query period.

        Falls back to the previous action when the backend fails. A
        converged report switches exploration back on for this period.
        """
        try:
            strategy = self.choose_strategy(pset, previous, trajectory, report)
        except BackendError as e:
            logger.warning('Node agent falls back to its previous action: %s',
                           e)
            if previous_action is None:
                strategy = previous or pset.newest()
                action = interpret_action(strategy, ctx)
                decided = _decided(strategy, ctx)
            else:
                strategy, action, decided = previous, previous_action, None
            return Decision(strategy, action, decided,
                            'fallback: previous action', fallback=True,
                            reason=str(e))
        escape = report is not None and report.converged
        played = escape_strategy(strategy, self._escape_sigma) if escape \
            else strategy
        action = interpret_action(played, ctx)
        label = rule_label(played, ctx)
        if escape:
            label = 'escape: ' + label
            logger.info('Action converged, exploring around strategy %s',
                        strategy.id)
        return Decision(strategy, action, _decided(strategy, ctx), label,
                        escape=escape)


def _decided(strategy, ctx):
    """The action without perturbation, used to judge convergence."""
    quiet = copy.copy(ctx)
    quiet.rng = np.random.default_rng(0)
    return interpret_action(strategy.replace(explore=Explore()), quiet)
