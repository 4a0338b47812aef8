"""
Programming assistant: turn backend replies into validated strategies
"""

from __future__ import annotations

import logging

from ..errors import (MaterializationExhaustedError, PreconditionError,
                      StrategyParseError)
from ..llm.prompts import json_span
from ..strategy.dsl import parse_strategy, validate_strategy

logger = logging.getLogger(__name__)

RETRY_MESSAGE = ('The strategy you gave cannot be used:\n{}\n'
                 'Fix these problems and answer with the corrected strategy '
                 'JSON only.')


def diagnostics_text(diagnostics):
    return '\n'.join('- {}'.format(d) for d in diagnostics)


def asi_materialize(text, backend, request, check, max_retries=3):
    """Materialize `text`, re-querying with the diagnostics until valid.

    Args:
        text: the reply to `request`.
        backend: queried again on every failed attempt.
        request: the CompletionRequest `text` answers; each retry continues
            its conversation.
        check: callable text -> Strategy raising StrategyParseError.
        max_retries: total attempts, the first one included.

    Returns:
        (strategy, number of re-queries).

    Raises:
        MaterializationExhaustedError: carrying one diagnostics bundle per
            failed attempt.
    """
    if max_retries < 1:
        raise PreconditionError('max_retries must be >= 1')
    bundles = []
    for attempt in range(max_retries):
        try:
            return check(text), attempt
        except StrategyParseError as e:
            bundles.append(e.diagnostics)
            logger.warning('Attempt %d of %d gave no valid strategy: %s',
                           attempt + 1, max_retries, e)
        if attempt + 1 == max_retries:
            break
        request = request.followup(
            text, RETRY_MESSAGE.format(diagnostics_text(bundles[-1])),
            tag='asi-retry')
        text = backend.complete(request)
    raise MaterializationExhaustedError(bundles)


class ProgrammingAssistant(object):
    """Checks strategies against one environment and repairs them via retries."""

    def __init__(self, backend, domain, frame_len=10, c_max=64, max_retries=3):
        self._backend = backend
        self._domain = domain
        self._frame_len = frame_len
        self._c_max = c_max
        self._max_retries = max_retries

    @property
    def domain(self):
        return self._domain

    def check(self, text):
        """Parse and validate; raises StrategyParseError listing every problem."""
        s = parse_strategy(json_span(text))
        diagnostics = validate_strategy(s, self._frame_len, self._c_max,
                                        self._domain)
        if diagnostics:
            raise StrategyParseError(diagnostics)
        return s

    def materialize(self, text, request):
        return asi_materialize(text, self._backend, request, self.check,
                               self._max_retries)
