"""Schema-driven parsing of the JSON file formats.

A schema is a tree of dicts built with `_add_attrib` (scalar fields) and
`_add_elem` (nested objects). An element declared with `required=None` is
repeated and parses from a JSON list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


def new_root(version):
    return {'name': None, 'required': True, 'type': None, 'default': None,
            'version': version, 'attrib': [], 'elem': []}


def _add_attrib(node, name, required, type=None, default=None, help='',
                choices=None, item=None):
    attrib = {
            'name': name,
            'required': required,
            'type': type,
            'default': default,
            'choices': choices,
            'item': item,
            'help': help,
            }
    node['attrib'].append(attrib)
    return attrib


def _add_elem(node, name, required, type=None, default=None, help=''):
    elem = {
            'name': name,
            'required': required,
            'type': type,
            'default': default,
            'help': help,
            'attrib': [],
            'elem': []
            }
    node['elem'].append(elem)
    return elem


@dataclass(frozen=True)
class Diagnostic:
    """One problem found while reading or checking a document."""

    code: str
    path: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self):
        where = self.path or '<root>'
        if self.line is not None:
            where = 'line {} column {}'.format(self.line, self.column)
        return '[{}] {}: {}'.format(self.code, where, self.message)

    def to_dict(self):
        d = {'code': self.code, 'path': self.path, 'message': self.message}
        if self.line is not None:
            d['line'] = self.line
            d['column'] = self.column
        return d


def _join(path, key):
    return '{}.{}'.format(path, key) if path else str(key)


def _check_scalar(value, dtype, item, path, diagnostics):
    """Type-check one scalar field; returns the coerced value."""
    if dtype is None:
        # shape checked by the caller
        return value
    if dtype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            diagnostics.append(Diagnostic('type', path, 'expected a number'))
            return None
        return float(value)
    if dtype is int:
        if isinstance(value, bool) or not isinstance(value, int):
            diagnostics.append(Diagnostic('type', path, 'expected an integer'))
            return None
        return value
    if dtype is bool:
        if not isinstance(value, bool):
            diagnostics.append(Diagnostic('type', path, 'expected a boolean'))
            return None
        return value
    if dtype is str:
        if not isinstance(value, str):
            diagnostics.append(Diagnostic('type', path, 'expected a string'))
            return None
        return value
    if dtype is list:
        if not isinstance(value, list):
            diagnostics.append(Diagnostic('type', path, 'expected a list'))
            return None
        out = []
        for i, v in enumerate(value):
            out.append(_check_scalar(v, item, None, _join(path, i),
                                     diagnostics))
        return out
    raise ValueError('Unrecognized type {} at {}'.format(dtype, path))


def parse_element(spec_node, data, path='', diagnostics=None):
    """Parse one JSON object against its schema node.

    Problems are appended to `diagnostics` instead of raised, so a caller
    sees every issue in the document at once.
    """
    if diagnostics is None:
        diagnostics = []
    if not isinstance(data, dict):
        diagnostics.append(Diagnostic('type', path, 'expected an object'))
        return {}
    descr_node = {}
    known = set()

    for spec_elem in spec_node['elem']:
        key = spec_elem['name']
        known.add(key)
        sub_path = _join(path, key)
        if key not in data or data[key] is None:
            if spec_elem['required']:
                diagnostics.append(
                    Diagnostic('missing', sub_path, 'required field missing'))
            descr_node[key] = ([] if spec_elem['required'] is None
                               else spec_elem['default'])
            continue
        if spec_elem['required'] is None:
            if not isinstance(data[key], list):
                diagnostics.append(
                    Diagnostic('type', sub_path, 'expected a list'))
                descr_node[key] = []
                continue
            descr_node[key] = [
                parse_element(spec_elem, v, _join(sub_path, i), diagnostics)
                for i, v in enumerate(data[key])]
        else:
            descr_node[key] = parse_element(spec_elem, data[key], sub_path,
                                            diagnostics)

    for spec_attrib in spec_node['attrib']:
        key = spec_attrib['name']
        known.add(key)
        sub_path = _join(path, key)
        if key not in data or data[key] is None:
            if spec_attrib['required']:
                diagnostics.append(
                    Diagnostic('missing', sub_path, 'required field missing'))
            descr_node[key] = spec_attrib['default']
            continue
        value = _check_scalar(data[key], spec_attrib['type'],
                              spec_attrib['item'], sub_path, diagnostics)
        choices = spec_attrib['choices']
        if choices is not None and value is not None and value not in choices:
            diagnostics.append(Diagnostic(
                'unknown-name', sub_path,
                'unknown name {!r}; expected one of {}'.format(
                    value, ', '.join(choices))))
        descr_node[key] = value

    for key in data:
        if key not in known:
            diagnostics.append(
                Diagnostic('unknown-field', _join(path, key),
                           'unknown field'))
    return descr_node
