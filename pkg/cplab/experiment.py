"""
Run directories: one experiment's inputs, outputs and reports
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .agents import get_api
from .agents.psa import HistoryEntry, StrategySet
from .agents.trace_view import render_dot, tree_from_paths
from .errors import (MissingArtifactError, PreconditionError,
                     TracingDisabledError, UnsupportedPopulationError)
from .llm import Transcript, get_backend
from .llm.prompts import TEMPLATES, load_template
from .metrics import (ThroughputSeries, clamped_alpha_fair_value,
                      flow_throughputs, jain_index, read_throughput_csv,
                      rmse_vs_reference, windowed_throughput,
                      write_throughput_csv)
from .oracle import aware_trajectory, oracle_report
from .simulation import parse_scenario, parse_scenario_from_file
from .simulation.io import save_scenario
from .strategy.dsl import strategy_from_dict
from .strategy.schema import STRATEGY_VERSION

logger = logging.getLogger(__name__)

CONFIG = 'config.json'
SCENARIO = 'scenario.json'
STRATEGIES = 'strategies.json'
PSA_HISTORY = 'psa_history.json'
EPISODES = 'episodes.json'
DEMOS = 'demos.json'
TRAJECTORY = 'trajectory.csv'
METRICS = 'metrics.json'
ORACLE = 'oracle.json'
TRANSCRIPT = 'transcript.jsonl'
TRACE = 'decision_trace.json'
TRACE_DOT = 'decision_trace.dot'
EVAL = 'eval.json'
REPLICAS = 'replicas.json'


def write_json(path, obj):
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path, what='artifact'):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise MissingArtifactError(path, '{} not found'.format(what))


def run_dir_name(spec, default='scenario'):
    return '{}-seed{}'.format(spec.name or default, spec.seed)


def versions(spec):
    return {'cplab': __version__,
            'scenario': spec.version,
            'strategy': STRATEGY_VERSION,
            'prompts': {name: load_template(name).tag for name in TEMPLATES}}


def snapshot(spec, config, backend_name, endpoint=None, model=None):
    return {'versions': versions(spec),
            'seed': spec.seed,
            'backend': {'name': backend_name, 'endpoint': endpoint,
                        'model': model},
            'agent_config': config.to_dict()}


def load_strategy_set(run_dir):
    """StrategySet replayed from the PSA history of an earlier run."""
    doc = read_json(os.path.join(run_dir, PSA_HISTORY), 'strategy set')
    bodies = {sid: strategy_from_dict(d)
              for sid, d in doc['strategies'].items()}
    history = [HistoryEntry(h['op'], h['strategy_id'], h['reason'])
               for h in doc['history']]
    pset = StrategySet.replay(history, bodies)
    if pset.ids != doc['live']:
        raise PreconditionError('{}: history does not replay to the saved '
                                'set'.format(run_dir))
    return pset


class Experiment(object):
    """One scenario, one seed, one output directory."""

    def __init__(self, spec, config, out_dir, backend_name='scripted',
                 endpoint=None, model=None, strategies_dir=None):
        self.spec = spec
        self.config = config
        self.out_dir = out_dir
        self.backend_name = backend_name
        self.endpoint = endpoint
        self.model = model
        self.strategies_dir = strategies_dir
        self.api = None

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def _prepare(self):
        os.makedirs(self.out_dir, exist_ok=True)
        # a rerun into the same directory starts a fresh transcript
        if os.path.exists(self.path(TRANSCRIPT)):
            os.remove(self.path(TRANSCRIPT))
        transcript = Transcript(self.path(TRANSCRIPT))
        backend = get_backend(self.backend_name, self.endpoint, self.model,
                              transcript)
        self.api = get_api(self.spec.family)(self.spec, self.config, backend)
        write_json(self.path(CONFIG), snapshot(
            self.spec, self.config, self.backend_name, self.endpoint,
            self.model))
        save_scenario(self.spec, self.path(SCENARIO))
        return self.api

    def offline(self):
        api = self._prepare()
        api.offline()
        self._write_offline()
        self._write_trace()
        return api

    def run(self):
        api = self._prepare()
        if self.strategies_dir is not None:
            api.load_offline(load_strategy_set(self.strategies_dir))
            logger.info('Loaded strategy set from %s', self.strategies_dir)
        else:
            api.offline()
        self._write_offline()
        world = api.online()
        metrics = self._write_results(world)
        self._write_trace()
        return metrics

    def _write_offline(self):
        api = self.api
        write_json(self.path(STRATEGIES), api.strategy_memory.to_dict())
        write_json(self.path(PSA_HISTORY), api.strategy_set.to_dict())
        write_json(self.path(EPISODES), api.episodic_memory.to_dict())
        write_json(self.path(DEMOS), [d.to_dict() for d in api.demos])

    def _write_trace(self):
        if not self.api.tracing:
            return
        doc, dot = self.api.export_decision_trace()
        write_json(self.path(TRACE), doc)
        with open(self.path(TRACE_DOT), 'w') as f:
            f.write(dot)

    def _write_results(self, world):
        if self.spec.family == 'mac':
            metrics = self._mac_results(world.log)
        else:
            metrics = self._tcp_results(world.log)
        metrics['escapes'] = self.api.escapes
        metrics['fallbacks'] = self.api.fallbacks
        metrics['env_changes'] = [list(c) for c in self.api.env_changes]
        write_json(self.path(METRICS), metrics)
        return metrics

    def _mac_results(self, log):
        cfg = self.config
        window = min(cfg.rmse_window, log.n_frames)
        series = windowed_throughput(log, window)
        write_throughput_csv(self.path(TRAJECTORY), series.rows())
        half = log.tail(log.n_frames - log.n_frames // 2)
        rates = half.frame_successes(series.node_ids).sum(axis=0) / (
            half.n_frames * half.frame_len)
        metrics = {'family': 'mac',
                   'throughput': {str(n): round(float(r), 6)
                                  for n, r in zip(series.node_ids, rates)},
                   'alpha_fair': clamped_alpha_fair_value(
                       rates, cfg.alpha, cfg.throughput_floor),
                   'jain': _jain_or_none(rates),
                   'rmse': None,
                   'parameters': {'window': window,
                                  'warmup': cfg.rmse_warmup,
                                  'alpha': cfg.alpha,
                                  'floor': cfg.throughput_floor}}
        try:
            write_json(self.path(ORACLE), oracle_report(self.spec, cfg.alpha))
            reference = aware_trajectory(self.spec, cfg.alpha)
            metrics['rmse'] = rmse_vs_reference(series, reference,
                                                cfg.rmse_warmup)
        except UnsupportedPopulationError as e:
            logger.info('No oracle reference: %s', e)
        except PreconditionError as e:
            logger.warning('RMSE skipped: %s', e)
        return metrics

    def _tcp_results(self, log):
        rows = []
        for fid, series in sorted(log.throughput_kbps().items()):
            rows.extend((r, fid, v) for r, v in series)
        rows.sort()
        write_throughput_csv(self.path(TRAJECTORY), rows,
                             ('round', 'flow', 'throughput_kbps'))
        last = log.n_rounds - log.n_rounds // 2
        kbps = flow_throughputs(log, last)
        values = np.array(list(kbps.values()))
        return {'family': 'tcp',
                'throughput_kbps': {str(k): round(v, 6)
                                    for k, v in kbps.items()},
                'jain': _jain_or_none(values),
                'parameters': {'last_rounds': last,
                               'beta': self.config.tcp_beta}}


def _jain_or_none(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not np.any(values > 0):
        return None
    return jain_index(values)


def run_replicas(spec, config, out_dir, replicas, backend_name='scripted',
                 endpoint=None, model=None, strategies_dir=None):
    """Seeds seed .. seed+replicas-1, each in `out_dir/seed-<s>/`.

    Seeds past 2**64 wrap around to 0.
    """
    seeds = [s - 2 ** 64 if s >= 2 ** 64 else s
             for s in (spec.seed + i for i in range(replicas))]

    def one(seed):
        return Experiment(spec.with_seed(seed), config,
                          os.path.join(out_dir, 'seed-{}'.format(seed)),
                          backend_name, endpoint, model,
                          strategies_dir).run()

    with ThreadPoolExecutor(max_workers=min(replicas, 4)) as pool:
        results = list(pool.map(one, seeds))
    summary = {'seeds': seeds, 'metrics': {}}
    for key in ('rmse', 'alpha_fair', 'jain', 'escapes', 'fallbacks'):
        values = [r.get(key) for r in results]
        values = [v for v in values if v is not None]
        if values:
            summary['metrics'][key] = {'mean': float(np.mean(values)),
                                       'std': float(np.std(values)),
                                       'n': len(values)}
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, REPLICAS), summary)
    return summary


def _series_from_csv(path):
    """ThroughputSeries rebuilt from a trajectory CSV (NaN where absent)."""
    data, header = read_throughput_csv(path)
    node_ids = tuple(sorted(data))
    frames = sorted({f for per in data.values() for f in per})
    values = np.full((len(frames), len(node_ids)), np.nan)
    row = {f: i for i, f in enumerate(frames)}
    for j, n in enumerate(node_ids):
        for f, v in data[n].items():
            values[row[f], j] = v
    return ThroughputSeries(node_ids, np.array(frames, dtype=int), values), \
        header


def evaluate_run(run_dir, reference=None):
    """Metric summary of a finished run, written to `eval.json`."""
    snap = read_json(os.path.join(run_dir, CONFIG), 'config snapshot')
    spec = parse_scenario(read_json(os.path.join(run_dir, SCENARIO),
                                    'scenario snapshot'))
    agent = snap['agent_config']
    path = os.path.join(run_dir, TRAJECTORY)
    if not os.path.exists(path):
        raise MissingArtifactError(path, 'trajectory not found')
    series, _ = _series_from_csv(path)
    out = {'run': os.path.basename(os.path.normpath(run_dir)),
           'family': spec.family}
    if spec.family == 'mac':
        warmup = agent['rmse_warmup']
        window = agent['rmse_window']
        tail = series.values[len(series.values) // 2:]
        with np.errstate(invalid='ignore'):
            means = np.nan_to_num(np.nanmean(tail, axis=0))
        out['alpha_fair'] = clamped_alpha_fair_value(
            means, agent['alpha'], agent['throughput_floor'])
        out['jain'] = _jain_or_none(means)
        out['rmse'] = None
        if reference is not None:
            ref, _ = _series_from_csv(reference)
        else:
            try:
                ref = aware_trajectory(spec, agent['alpha'])
            except UnsupportedPopulationError as e:
                logger.info('No oracle reference: %s', e)
                ref = None
        if ref is not None:
            out['rmse'] = rmse_vs_reference(series, ref, warmup)
        out['parameters'] = {'window': window, 'warmup': warmup,
                             'alpha': agent['alpha'],
                             'floor': agent['throughput_floor'],
                             'reference': reference or 'oracle'}
    else:
        last = spec.total_rounds - spec.total_rounds // 2
        keep = series.frames >= spec.total_rounds - last
        with np.errstate(invalid='ignore'):
            means = np.nan_to_num(np.nanmean(series.values[keep], axis=0))
        out['throughput_kbps'] = {str(n): round(float(v), 6)
                                  for n, v in zip(series.node_ids, means)}
        out['jain'] = _jain_or_none(means)
        out['parameters'] = {'last_rounds': last, 'beta': agent['tcp_beta']}
    write_json(os.path.join(run_dir, EVAL), out)
    return out


def export_trace(run_dir):
    """Decision tree and DOT graph of a traced run, rebuilt from its paths."""
    snap = read_json(os.path.join(run_dir, CONFIG), 'config snapshot')
    if not snap['agent_config'].get('tracing', True):
        raise TracingDisabledError(
            '{} was run with tracing off'.format(run_dir))
    doc = read_json(os.path.join(run_dir, TRACE), 'decision trace')
    tree = tree_from_paths(doc['paths'])
    dot = render_dot(tree)
    write_json(os.path.join(run_dir, 'decision_tree.json'), tree)
    with open(os.path.join(run_dir, 'decision_tree.dot'), 'w') as f:
        f.write(dot)
    return tree, dot


def tree_text(tree, indent=0):
    """Indented plain-text rendering of a decision tree."""
    lines = []
    for node in tree:
        lines.append('{}{}: {}{}'.format(
            '  ' * indent, node['actor'], node['label'],
            ' (x{})'.format(node['count']) if node['count'] > 1 else ''))
        lines.extend(tree_text(node['children'], indent + 1))
    return lines


def load_spec(path, seed=None):
    spec = parse_scenario_from_file(path)
    if spec.name is None:
        name = os.path.splitext(os.path.basename(path))[0]
        spec = _renamed(spec, name)
    return spec if seed is None else spec.with_seed(seed)


def _renamed(spec, name):
    d = spec.to_dict()
    d['name'] = name
    return parse_scenario(d)
