"""Versioned prompt templates and the tagged blocks they carry."""

from __future__ import annotations

import functools
import json
import os
import re
import string
from dataclasses import dataclass

from ..errors import MissingArtifactError, UnrecognizedTemplateError
from .base_backend import CompletionRequest

PROMPT_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(
        __file__)))), 'assets', 'prompts')

TEMPLATES = ('strategy-gen', 'reflection', 'observer-summary',
             'node-decision', 'judge', 'psa-conflict')

ITEMS_MARKER = '$items'

_HEADER = re.compile(r'^template: ([a-z-]+)/v(\d+)\s*$', re.M)
_SECTION = re.compile(r'^--- (system|user)\s*$', re.M)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    version: int
    system: str
    user: str

    @property
    def tag(self):
        return '{}/v{}'.format(self.name, self.version)

    def render(self, request_tag='', **fields):
        fields.setdefault('dsl', dsl_reference())
        fields = {k: v if isinstance(v, str) else to_json(v)
                  for k, v in fields.items()}
        header = 'template: {}\n'.format(self.tag)
        system = string.Template(self.system).safe_substitute(fields)
        user = string.Template(self.user).safe_substitute(fields)
        return CompletionRequest((('system', header + system),
                                  ('user', user)),
                                 request_tag=request_tag or self.tag)


def to_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def _read(path):
    try:
        with open(path) as f:
            return f.read()
    except FileNotFoundError:
        raise MissingArtifactError(path, 'prompt template not found')


@functools.lru_cache(maxsize=None)
def dsl_reference():
    return _read(os.path.join(PROMPT_DIR, 'strategy-dsl.txt')).strip()


@functools.lru_cache(maxsize=None)
def load_template(name):
    if name not in TEMPLATES:
        raise UnrecognizedTemplateError('unknown prompt template ' + name)
    text = _read(os.path.join(PROMPT_DIR, name + '.txt'))
    m = _HEADER.search(text)
    if m is None or m.group(1) != name:
        raise UnrecognizedTemplateError(
            'template file {} lacks its header'.format(name))
    parts = _SECTION.split(text[m.end():])
    sections = dict(zip(parts[1::2], (p.strip('\n') for p in parts[2::2])))
    return PromptTemplate(name, int(m.group(2)), sections.get('system', ''),
                          sections.get('user', ''))


def format_items(items):
    return '\n'.join('<item>{}</item>'.format(
        i if isinstance(i, str) else to_json(i)) for i in items)


def render(name, items=None, request_tag='', **fields):
    """Render a template; `items=None` keeps the items marker for a ranker."""
    if items is not None:
        fields['items'] = format_items(items)
    return load_template(name).render(request_tag=request_tag, **fields)


def template_of(text):
    """(name, version) of the template a prompt was rendered from."""
    m = _HEADER.search(text)
    if m is None:
        return None
    return m.group(1), int(m.group(2))


def blocks(text, tag):
    pattern = r'<{0}(?:\s[^>]*)?>(.*?)</{0}>'.format(re.escape(tag))
    return re.findall(pattern, text, re.S)


def indexed_blocks(text, tag):
    """{index: content} of `<tag index="i">` blocks."""
    pattern = r'<{0} index="(\d+)">(.*?)</{0}>'.format(re.escape(tag))
    return {int(i): body for i, body in re.findall(pattern, text, re.S)}


def block_json(text, tag, default=None):
    """First <tag> block decoded as JSON, or `default` when absent/invalid."""
    found = blocks(text, tag)
    if not found:
        return default
    try:
        return json.loads(found[0])
    except ValueError:
        return default


def json_span(text):
    """The JSON document inside a model reply (fenced block or first object)."""
    fenced = re.search(r'```(?:json)?\s*(.*?)```', text, re.S)
    if fenced:
        return fenced.group(1).strip()
    start = text.find('{')
    if start < 0:
        return text
    try:
        _, end = json.JSONDecoder().raw_decode(text, start)
    except ValueError:
        return text[start:]
    return text[start:end]
