"""Order-reversal ranker: two candidates from mirrored prompts, one judge."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

from ..errors import (JudgeIndecisionError, PreconditionError,
                      StrategyParseError)
from .base_backend import CompletionRequest
from .prompts import ITEMS_MARKER, format_items, json_span, render

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankerQuery:
    """A request whose `$items` region is filled in two orders."""

    base: CompletionRequest
    items: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'items', tuple(self.items))
        if not self.items:
            raise PreconditionError('ranker query needs at least one item')
        if not any(ITEMS_MARKER in c for _, c in self.base.messages):
            raise PreconditionError('base request has no items region')

    def _fill(self, items):
        region = format_items(items)
        return CompletionRequest(
            tuple((r, c.replace(ITEMS_MARKER, region))
                  for r, c in self.base.messages),
            self.base.temperature, self.base.max_tokens,
            self.base.request_tag)

    def first(self):
        return self._fill(self.items)

    def second(self):
        return self._fill(self.items[::-1])


@dataclass(frozen=True)
class RankedResult:
    text: str
    choice: int
    candidates: Tuple[str, str]
    rationale: str
    judged: bool
    estimates: Tuple[Optional[float], Optional[float]] = (None, None)


def _parse_choice(reply):
    try:
        data = json.loads(json_span(reply))
        choice = int(data['choice'])
    except (ValueError, KeyError, TypeError):
        return None, reply.strip()
    if choice not in (1, 2):
        return None, reply.strip()
    return choice, str(data.get('rationale', ''))


def judge(first, second, backend, context='', check=None, estimator=None):
    """Pick between two responses; returns (choice, rationale, estimates).

    Args:
        check: callable turning a response into a Strategy, raising
            StrategyParseError; a candidate that fails it loses outright.
        estimator: optional callable Strategy -> estimated objective, shown
            to the judge next to each candidate.
    """
    strategies = [None, None]
    failures = []
    if check is not None:
        for i, text in enumerate((first, second)):
            try:
                strategies[i] = check(text)
            except StrategyParseError as e:
                failures.append(e.diagnostics)
        if len(failures) == 2:
            raise JudgeIndecisionError(
                'neither candidate is a valid strategy', (first, second),
                failures[0] + failures[1])
        if strategies[0] is None:
            return 2, 'candidate 1 is not a valid strategy', (None, None)
        if strategies[1] is None:
            return 1, 'candidate 2 is not a valid strategy', (None, None)

    estimates = (None, None)
    if estimator is not None and strategies[0] is not None:
        estimates = tuple(float(estimator(s)) for s in strategies)
    fmt = [('{:.6f}'.format(e) if e is not None else 'unknown')
           for e in estimates]
    request = render('judge', context=context, first=first, second=second,
                     first_j=fmt[0], second_j=fmt[1])
    reply = backend.complete(request)
    choice, rationale = _parse_choice(reply)
    if choice is None:
        logger.warning('Judge gave no usable choice, keeping candidate 1')
        return 1, rationale, estimates
    return choice, rationale, estimates


def ranked_complete(query, backend, judge_backend=None, context='',
                    check=None, estimator=None):
    """Issue both orderings concurrently and keep the judged-better reply."""
    with ThreadPoolExecutor(max_workers=2) as pool:
        f1 = pool.submit(backend.complete, query.first())
        f2 = pool.submit(backend.complete, query.second())
        r1, r2 = f1.result(), f2.result()
    if r1 == r2:
        return RankedResult(r1, 1, (r1, r2), 'identical candidates', False)
    choice, rationale, estimates = judge(
        r1, r2, judge_backend or backend, context, check, estimator)
    logger.info('Ranker picked candidate %d: %s', choice, rationale)
    return RankedResult((r1, r2)[choice - 1], choice, (r1, r2), rationale,
                        True, estimates)
