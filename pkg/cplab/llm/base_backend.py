"""
Completion backend base class and request type
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Tuple

from ..errors import PreconditionError

logger = logging.getLogger(__name__)

ROLES = ('system', 'user', 'assistant')


@dataclass(frozen=True)
class CompletionRequest:
    messages: Tuple[Tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    request_tag: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'messages',
                           tuple((r, c) for r, c in self.messages))
        if not self.messages:
            raise PreconditionError('completion request has no messages')
        for role, _ in self.messages:
            if role not in ROLES:
                raise PreconditionError('unknown role {!r}'.format(role))
        if not 0.0 <= self.temperature <= 2.0:
            raise PreconditionError('temperature must lie in [0, 2]')

    def as_messages(self):
        """Wire form: list of {role, content} dicts."""
        return [{'role': r, 'content': c} for r, c in self.messages]

    def prompt_text(self):
        return '\n'.join(c for _, c in self.messages)

    def digest(self):
        return hashlib.sha256(
            json.dumps(self.as_messages(), sort_keys=True).encode('utf-8')
        ).hexdigest()[:16]

    def followup(self, reply, message, tag=None):
        """The conversation continued by `reply` and a new user message."""
        return CompletionRequest(
            self.messages + (('assistant', reply), ('user', message)),
            self.temperature, self.max_tokens,
            self.request_tag if tag is None else tag)


@dataclass
class Transcript:
    """Every request/response pair, optionally mirrored to a JSON-lines file."""

    path: str = None
    entries: list = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def record(self, backend, request, response):
        entry = {'backend': backend,
                 'tag': request.request_tag,
                 'request_digest': request.digest(),
                 'messages': request.as_messages(),
                 'temperature': request.temperature,
                 'response': response}
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with open(self.path, 'a') as f:
                    f.write(json.dumps(entry, sort_keys=True) + '\n')


class Backend(object):
    """Completion backend base class."""

    name = 'base'

    def __init__(self, transcript=None):
        self._transcript = transcript

    @property
    def transcript(self):
        return self._transcript

    def complete(self, request):
        """Response text of one completion request."""
        if not isinstance(request, CompletionRequest):
            raise PreconditionError('expected a CompletionRequest')
        text = self._complete(request)
        logger.debug('%s answered %s (%d chars)', self.name,
                     request.request_tag or request.digest(), len(text))
        if self._transcript is not None:
            self._transcript.record(self.name, request, text)
        return text

    def _complete(self, request):
        raise NotImplementedError
