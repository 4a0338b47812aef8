"""Strategy agent: initial strategy from demonstrations, then self-reflection."""

from __future__ import annotations

import logging

from ..errors import JudgeIndecisionError, PreconditionError
from ..llm.prompts import render, to_json
from ..llm.ranker import RankerQuery, ranked_complete

logger = logging.getLogger(__name__)


class StrategyAgent(object):
    """Writes and revises strategies through the backend.

    Every reply goes through the ranker (when enabled) and then the
    programming assistant, which retries until the strategy validates.
    """

    def __init__(self, backend, assistant, memory, settings, ranker=True,
                 judge_backend=None, estimator=None, view=None):
        self._backend = backend
        self._assistant = assistant
        self._memory = memory
        self._settings = dict(settings)
        self._ranker = ranker
        self._judge_backend = judge_backend
        self._estimator = estimator
        self._view = view

    @property
    def settings(self):
        return dict(self._settings)

    def _complete(self, template, items, label, **fields):
        """Backend reply for `template`, materialized into a Strategy."""
        steps = []
        view = self._view
        if self._ranker:
            base = render(template, items=None, request_tag=template,
                          settings=self._settings, **fields)
            query = RankerQuery(base, items)
            try:
                result = ranked_complete(query, self._backend,
                                         self._judge_backend,
                                         to_json(self._settings),
                                         self._assistant.check,
                                         self._estimator)
                text = result.text
                request = query.first() if result.choice == 1 else \
                    query.second()
                rank_label = 'candidate {} of 2: {}'.format(
                    result.choice, result.rationale)
            except JudgeIndecisionError as e:
                logger.warning('%s; repairing the first candidate', e)
                text, request = e.candidates[0], query.first()
                rank_label = 'no valid candidate, repairing candidate 1'
            if view is not None:
                steps.append(view.step('ranker', rank_label,
                                       inputs=base.digest(), outputs=text))
        else:
            request = render(template, items=items, request_tag=template,
                             settings=self._settings, **fields)
            text = self._backend.complete(request)
        strategy, retries = self._assistant.materialize(text, request)
        if view is not None:
            steps.insert(0, view.step('strategy', label,
                                      inputs=request.digest()))
            steps.append(view.step(
                'assistant', 'strategy {} after {} retr{}'.format(
                    strategy.id, retries, 'y' if retries == 1 else 'ies'),
                inputs=text, outputs=strategy.to_dict()))
            view.add_path(steps)
        return strategy, retries

    def generate_initial_strategy(self, demos):
        """Strategy with the best demonstrated reward across the demo sets."""
        if not demos:
            raise PreconditionError('no demonstrations to learn from')
        items = [d.item() for d in demos]
        s, _ = self._complete(
            'strategy-gen', items,
            'generate from {} demonstration sets'.format(len(demos)))
        s = s.replace(provenance='generated')
        self._memory.add(s, 'generated from {}'.format(
            ', '.join(d.label for d in demos)))
        logger.info('Generated initial strategy %s', s.id)
        return s

    def reflect_and_refine(self, s, episode, j_opt):
        """Revised strategy from one evaluation episode that fell short."""
        if episode.j_estimate >= j_opt:
            raise PreconditionError(
                'J={:.6f} already meets J_opt={:.6f}'.format(
                    episode.j_estimate, j_opt))
        summary = episode.summary
        items = [to_json(n) for n in
                 summary.get('nodes', summary.get('flows', []))]
        if not items:
            raise PreconditionError('episode summary lists no node or flow')
        context = dict(summary)
        context.pop('nodes', None)
        context.pop('flows', None)
        context.update(j=episode.j_estimate, j_opt=j_opt,
                       iteration=episode.iteration)
        refined, _ = self._complete(
            'reflection', items,
            'refine {} (J={:.4f} < {:.4f})'.format(s.id, episode.j_estimate,
                                                   j_opt),
            strategy=s.to_dict(), episode=context)
        refined = refined.replace(provenance='refined')
        self._memory.add(refined, 'refined from {} at iteration {}'.format(
            s.id, episode.iteration))
        logger.info('Refined %s into %s', s.id, refined.id)
        return refined
