"""
Progressive strategy augmentation: the live strategy set and its history
"""

from __future__ import annotations

import json
import logging
from collections import OrderedDict
from typing import NamedTuple, Optional

from ..errors import MalformedResponseError
from ..llm.prompts import json_span, render

logger = logging.getLogger(__name__)

ADD = 'add'
REMOVE = 'remove'
SKIP = 'skip'


class HistoryEntry(NamedTuple):
    op: str
    strategy_id: str
    reason: str

    def to_dict(self):
        return {'op': self.op, 'strategy_id': self.strategy_id,
                'reason': self.reason}


class StrategySet(object):
    """Ordered set of strategies (oldest first) with an append-only history."""

    def __init__(self):
        self._live = OrderedDict()
        self._bodies = {}
        self._history = []

    def __len__(self):
        return len(self._live)

    def __contains__(self, strategy_id):
        return strategy_id in self._live

    def __iter__(self):
        return iter(self._live.values())

    @property
    def ids(self):
        return list(self._live)

    @property
    def strategies(self):
        return list(self._live.values())

    @property
    def history(self):
        return list(self._history)

    @property
    def bodies(self):
        return dict(self._bodies)

    def newest(self):
        if not self._live:
            return None
        return next(reversed(self._live.values()))

    def get(self, strategy_id):
        return self._live[strategy_id]

    def add(self, strategy, reason='added'):
        """Insert `strategy`; an id already present is a recorded no-op."""
        sid = strategy.id
        if sid in self._live:
            self.skip(strategy, 'duplicate of {}'.format(sid))
            return False
        self._live[sid] = strategy
        self._bodies[sid] = strategy
        self._history.append(HistoryEntry(ADD, sid, reason))
        return True

    def skip(self, strategy, reason):
        self._bodies.setdefault(strategy.id, strategy)
        self._history.append(HistoryEntry(SKIP, strategy.id, reason))

    def remove(self, strategy_id, reason):
        if strategy_id not in self._live:
            raise KeyError(strategy_id)
        del self._live[strategy_id]
        self._history.append(HistoryEntry(REMOVE, strategy_id, reason))

    @classmethod
    def replay(cls, history, bodies):
        """Rebuild a set from its history and the strategy bodies."""
        pset = cls()
        for entry in history:
            if entry.op == ADD:
                pset.add(bodies[entry.strategy_id], entry.reason)
            elif entry.op == REMOVE:
                pset.remove(entry.strategy_id, entry.reason)
            elif entry.op == SKIP:
                pset.skip(bodies[entry.strategy_id], entry.reason)
            else:
                raise ValueError('Unrecognized history op {}'.format(entry.op))
        return pset

    def memory_items(self):
        """Prompt items, oldest first, each with its position in the set."""
        return [json.dumps({'id': s.id, 'rank': i, 'strategy': s.to_dict()},
                           sort_keys=True, separators=(',', ':'))
                for i, s in enumerate(self._live.values())]

    def to_dict(self):
        return {'live': self.ids,
                'history': [h.to_dict() for h in self._history],
                'strategies': {sid: s.to_dict()
                               for sid, s in sorted(self._bodies.items())}}


def _parse_verdict(reply):
    try:
        data = json.loads(json_span(reply))
        redundant = bool(data.get('redundant', False))
        obsolete = [str(i) for i in data.get('obsolete', [])]
        reason = str(data.get('reason', ''))
    except (ValueError, TypeError, AttributeError):
        raise MalformedResponseError('unreadable strategy-set verdict')
    return redundant, obsolete, reason


def psa_update(pset, new, backend, on_verdict=None):
    """Insert `new` and drop what it makes redundant or obsolete.

    Returns the updated set (the same object).
    """
    if new.id in pset:
        pset.add(new)
        logger.info('Strategy %s already in the set', new.id)
        return pset
    if not len(pset):
        pset.add(new, 'initial strategy')
        return pset

    request = render('psa-conflict', items=pset.memory_items(),
                     request_tag='psa-conflict',
                     new={'id': new.id, 'strategy': new.to_dict()})
    try:
        redundant, obsolete, reason = _parse_verdict(backend.complete(request))
    except MalformedResponseError as e:
        logger.warning('%s; adding %s without removals', e, new.id)
        redundant, obsolete, reason = False, [], 'verdict unreadable'
    if on_verdict is not None:
        on_verdict(new, redundant, obsolete, reason)

    if redundant:
        pset.skip(new, 'redundant: ' + reason)
        logger.info('Skipped redundant strategy %s: %s', new.id, reason)
        return pset
    pset.add(new, reason or 'added')
    for sid in obsolete:
        if sid == new.id:
            continue
        if sid not in pset:
            logger.warning('Verdict names unknown strategy %s', sid)
            continue
        pset.remove(sid, 'obsoleted by {}'.format(new.id))
        logger.info('Removed strategy %s, obsoleted by %s', sid, new.id)
    return pset
