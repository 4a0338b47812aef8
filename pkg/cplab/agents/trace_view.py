"""
Records who decided what: root-to-leaf decision paths and their merged tree
"""

from __future__ import annotations

import hashlib
import json

from ..errors import TracingDisabledError

ACTORS = ('strategy', 'observer', 'node', 'assistant', 'ranker', 'action')


def digest(obj):
    """Short content digest of any JSON-encodable value."""
    text = obj if isinstance(obj, str) else json.dumps(
        obj, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]


def _dot_escape(text):
    return text.replace('\\', '\\\\').replace('"', '\\"')


class DecisionTraceView:

    def __init__(self, tracing=True):
        self._tracing = tracing
        self._stage = None
        self._period = None
        self._agent_id = None
        self.trace_stack = [[]]
        self.depth_trace = []

    @property
    def tracing(self):
        return self._tracing

    def step(self, actor, label, inputs=None, outputs=None, detail=None):
        """One decision: who took it, a readable label, in/out digests."""
        if actor not in ACTORS:
            raise ValueError('Unrecognized actor {}'.format(actor))
        return {'actor': actor,
                'label': label,
                'input_digest': digest(inputs) if inputs is not None else None,
                'output_digest': digest(outputs) if outputs is not None
                else None,
                'detail': detail,
                'stage': self._stage,
                'period': self._period,
                'agent': self._agent_id}

    def begin(self, stage, period=None, agent_id=None):
        self._stage = stage
        self._period = period
        self._agent_id = agent_id

    def push_trace(self, step):
        if not self._tracing:
            return
        self.trace_stack[-1].append(step)
        self.trace_stack.append([])

    def pop_trace(self):
        """Close the innermost step; returns its root-to-leaf path."""
        if not self._tracing:
            return []
        self.trace_stack.pop()
        root_to_leaf = [level[-1] for level in self.trace_stack if level]
        if len(self.trace_stack) == 1:
            self.trace_stack = [[]]
        return root_to_leaf

    def add_path(self, steps):
        """Push `steps` as one chain and record it when the leaf closes."""
        if not self._tracing:
            return
        for s in steps:
            self.push_trace(s)
        self.depth_trace.append(self.pop_trace())
        for _ in steps[1:]:
            self.pop_trace()

    def decision_tree(self):
        """Paths merged on (actor, label), first appearance first."""
        roots = []
        for path in self.depth_trace:
            level = roots
            for s in path:
                for node in level:
                    if node['actor'] == s['actor'] and \
                            node['label'] == s['label']:
                        node['count'] += 1
                        break
                else:
                    node = {'actor': s['actor'], 'label': s['label'],
                            'count': 1, 'children': []}
                    level.append(node)
                level = node['children']
        return roots

    def export_decision_trace(self):
        """(trace document, DOT text) of everything recorded so far."""
        if not self._tracing:
            raise TracingDisabledError('run was executed with tracing off')
        doc = {'version': 'trace-v1',
               'tree': self.decision_tree(),
               'paths': self.depth_trace}
        return doc, render_dot(doc['tree'])


def render_dot(tree):
    lines = ['digraph decisions {', '  node [shape=box];']
    counter = [0]

    def visit(node, parent):
        name = 'n{}'.format(counter[0])
        counter[0] += 1
        label = '{}\\n{}'.format(_dot_escape(node['actor']),
                                 _dot_escape(node['label']))
        if node['count'] > 1:
            label += '\\n(x{})'.format(node['count'])
        lines.append('  {} [label="{}"];'.format(name, label))
        if parent is not None:
            lines.append('  {} -> {};'.format(parent, name))
        for child in node['children']:
            visit(child, name)

    for root in tree:
        visit(root, None)
    lines.append('}')
    return '\n'.join(lines) + '\n'


def tree_from_paths(paths):
    """Rebuild the merged tree from a saved trace document's paths."""
    view = DecisionTraceView()
    view.depth_trace = list(paths)
    return view.decision_tree()
