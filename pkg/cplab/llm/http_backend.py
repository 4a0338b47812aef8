"""
Live backend speaking the OpenAI-compatible chat-completions protocol
"""

from __future__ import annotations

import logging
import os

import backoff
import openai

from ..errors import BackendUnavailableError, MalformedResponseError
from .base_backend import Backend

logger = logging.getLogger(__name__)

API_KEY_VARS = ('CPLAB_API_KEY', 'OPENAI_API_KEY')
DEFAULT_MODEL = 'gpt-4o'

# 5xx, timeouts, dropped connections and rate limits are worth retrying
TRANSIENT_ERRORS = (openai.APIConnectionError, openai.APITimeoutError,
                    openai.InternalServerError, openai.RateLimitError)


def resolve_api_key(api_key=None):
    if api_key:
        return api_key
    for var in API_KEY_VARS:
        value = os.getenv(var, '').strip()
        if value:
            return value
    return None


def _log_retry(details):
    logger.warning('Backend request failed, retry %d after %.1fs',
                   details['tries'], details['wait'])


class HttpBackend(Backend):
    """Chat completions over HTTP with bounded exponential retries."""

    name = 'http'

    def __init__(self, endpoint=None, model=DEFAULT_MODEL, api_key=None,
                 timeout=60.0, max_tries=4, backoff_factor=1.0,
                 transcript=None):
        super().__init__(transcript)
        self._endpoint = endpoint
        self._model = model
        self._api_key = resolve_api_key(api_key)
        self._timeout = timeout
        self._client = None
        self._create = backoff.on_exception(
            backoff.expo, TRANSIENT_ERRORS, max_tries=max_tries,
            factor=backoff_factor, on_backoff=_log_retry)(self._create_once)

    @property
    def model(self):
        return self._model

    @property
    def endpoint(self):
        return self._endpoint

    @property
    def client(self):
        if self._client is None:
            if not self._api_key:
                raise BackendUnavailableError(
                    'no API credential; set one of {}'.format(
                        ', '.join(API_KEY_VARS)))
            # retries are handled here, not by the client
            self._client = openai.OpenAI(api_key=self._api_key,
                                         base_url=self._endpoint,
                                         timeout=self._timeout,
                                         max_retries=0)
        return self._client

    def _create_once(self, request):
        return self.client.chat.completions.create(
            model=self._model,
            messages=request.as_messages(),
            temperature=request.temperature,
            max_tokens=request.max_tokens)

    def _complete(self, request):
        try:
            response = self._create(request)
        except TRANSIENT_ERRORS as e:
            raise BackendUnavailableError(
                'backend unreachable: {}'.format(e),
                status=getattr(e, 'status_code', None))
        except openai.APIStatusError as e:
            raise BackendUnavailableError(
                'backend refused the request: {}'.format(e),
                status=e.status_code)
        try:
            content = response.choices[0].message.content
        except (AttributeError, IndexError, TypeError):
            raise MalformedResponseError('response carries no message')
        if not isinstance(content, str) or not content.strip():
            raise MalformedResponseError('response message is empty')
        return content
