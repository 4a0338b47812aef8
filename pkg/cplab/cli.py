"""Command line entry points: run, oracle, demos, offline, eval, trace."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import load_config
from .errors import CplabError, InvalidSpecError
from .experiment import (Experiment, evaluate_run, export_trace, load_spec,
                         run_dir_name, run_replicas, tree_text,
                         write_json)
from .agents.demos import generate_demos
from .oracle import aware_trajectory, oracle_report
from .metrics import write_throughput_csv

logger = logging.getLogger(__name__)


def _add_agent_args(parser):
    parser.add_argument('scenario',
                        help='The scenario file (mac-v1 or tcp-v1 JSON).')

    parser.add_argument('--config', dest='config',
                        help='Agent defaults (JSON), or the config.json of '
                             'an earlier run.',
                        default=None, type=str)

    parser.add_argument('--backend', dest='backend',
                        help='Completion backend.',
                        default='scripted', choices=('scripted', 'http'))

    parser.add_argument('--endpoint', dest='endpoint',
                        help='Base URL of an OpenAI-compatible endpoint.',
                        default=None, type=str)

    parser.add_argument('--model', dest='model',
                        help='Model name for the http backend.',
                        default=None, type=str)

    parser.add_argument('--out', dest='out',
                        help='Parent directory of the run directory.',
                        default='out', type=str)

    parser.add_argument('--seed', dest='seed',
                        help='Override the scenario seed.',
                        default=None, type=int)

    parser.add_argument('--query-period', dest='query_period',
                        help='Query period T in slots (MAC).',
                        default=None, type=int)

    parser.add_argument('--sigma', dest='sigma',
                        help='Perturbation std of the strategies.',
                        default=None, type=float)

    parser.add_argument('--no-observer', dest='no_observer',
                        help='Run without the observer agent.',
                        action='store_true')

    parser.add_argument('--no-strategy', dest='no_strategy',
                        help='Run without the strategy agent (fixed 1/N '
                             'strategy).',
                        action='store_true')

    parser.add_argument('--no-ranker', dest='no_ranker',
                        help='Disable the offline ranker.',
                        action='store_true')

    parser.add_argument('--ranker-online', dest='ranker_online',
                        help='Rank node-agent replies online too.',
                        action='store_true')

    parser.add_argument('--no-trace', dest='no_trace',
                        help='Do not record the decision trace.',
                        action='store_true')


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='cplab',
        description='CP-agent laboratory for MAC and TCP coexistence'
    )

    parser.add_argument('--verbose', dest='verbose',
                        help='Log at DEBUG level.',
                        action='store_true')

    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Offline learning then online run.')
    _add_agent_args(run)
    run.add_argument('--replicas', dest='replicas',
                     help='Number of seed replicas.',
                     default=1, type=int)
    run.add_argument('--strategies', dest='strategies',
                     help='Run directory whose strategy set is reused.',
                     default=None, type=str)

    offline = sub.add_parser('offline', help='Offline learning only.')
    _add_agent_args(offline)

    oracle = sub.add_parser('oracle', help='Ideal policies of a scenario.')
    oracle.add_argument('scenario', help='The scenario file.')
    oracle.add_argument('--alpha', dest='alpha', default=1.0, type=float,
                        help='Fairness parameter.')
    oracle.add_argument('--out', dest='out', default='out', type=str,
                        help='Output directory.')

    demos = sub.add_parser('demos', help='Simulated demonstrations.')
    demos.add_argument('--family', dest='family', default='mac',
                       choices=('mac', 'tcp'), help='Scenario family.')
    demos.add_argument('--k', dest='k', default=None, type=int,
                       help='Samples per demonstration set.')
    demos.add_argument('--seed', dest='seed', default=0, type=int,
                       help='Seed.')
    demos.add_argument('--config', dest='config', default=None, type=str,
                       help='Agent defaults (JSON).')
    demos.add_argument('--out', dest='out', default='out', type=str,
                       help='Output directory.')

    ev = sub.add_parser('eval', help='Metric summary of a run directory.')
    ev.add_argument('run_dir', help='The run directory.')
    ev.add_argument('--reference', dest='reference', default=None, type=str,
                    help='Reference throughput CSV; the oracle by default.')

    trace = sub.add_parser('trace', help='Decision tree of a run directory.')
    trace.add_argument('run_dir', help='The run directory.')

    return parser.parse_args(argv)


def agent_config(args):
    """AgentConfig from --config (plain or run snapshot) and the flags."""
    config = load_config(getattr(args, 'config', None))
    if not hasattr(args, 'no_observer'):
        return config
    return config.replace(
        query_period=args.query_period,
        sigma=args.sigma,
        observer_enabled=False if args.no_observer else None,
        strategy_enabled=False if args.no_strategy else None,
        ranker_offline=False if args.no_ranker else None,
        ranker_online=True if args.ranker_online else None,
        tracing=False if args.no_trace else None)


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_run(args):
    config = agent_config(args)
    spec = load_spec(args.scenario, args.seed)
    if args.replicas < 1:
        raise InvalidSpecError('replicas', 'must be >= 1')
    out_dir = os.path.join(args.out, run_dir_name(spec))
    if args.replicas > 1:
        summary = run_replicas(spec, config, out_dir, args.replicas,
                               args.backend, args.endpoint, args.model,
                               args.strategies)
        _emit(summary)
        return 0
    logger.info('Running %s (%s) into %s', spec.name, spec.describe(),
                out_dir)
    metrics = Experiment(spec, config, out_dir, args.backend, args.endpoint,
                         args.model, args.strategies).run()
    _emit({'run_dir': out_dir, 'metrics': metrics})
    return 0


def cmd_offline(args):
    config = agent_config(args)
    spec = load_spec(args.scenario, args.seed)
    out_dir = os.path.join(args.out, run_dir_name(spec))
    api = Experiment(spec, config, out_dir, args.backend, args.endpoint,
                     args.model).offline()
    _emit({'run_dir': out_dir, 'strategies': api.strategy_set.ids})
    return 0


def cmd_oracle(args):
    spec = load_spec(args.scenario)
    if spec.family != 'mac':
        raise InvalidSpecError('version', 'the oracle covers MAC scenarios')
    report = oracle_report(spec, args.alpha)
    reference = aware_trajectory(spec, args.alpha)
    out_dir = os.path.join(args.out, '{}-oracle'.format(spec.name))
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, 'oracle.json'), report)
    write_throughput_csv(os.path.join(out_dir, 'reference.csv'),
                         reference.rows())
    _emit(report)
    return 0


def cmd_demos(args):
    config = agent_config(args)
    k = config.demo_k if args.k is None else args.k
    demos = generate_demos(args.family, k, args.seed, config)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, 'demos-{}-seed{}.json'.format(args.family,
                                                                args.seed))
    write_json(path, [d.to_dict() for d in demos])
    _emit({'path': path, 'labels': [d.label for d in demos], 'k': k})
    return 0


def cmd_eval(args):
    _emit(evaluate_run(args.run_dir, args.reference))
    return 0


def cmd_trace(args):
    tree, _ = export_trace(args.run_dir)
    print('\n'.join(tree_text(tree)))
    return 0


COMMANDS = {'run': cmd_run, 'offline': cmd_offline, 'oracle': cmd_oracle,
            'demos': cmd_demos, 'eval': cmd_eval, 'trace': cmd_trace}


def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args)
    except CplabError as e:
        logger.debug('Command failed', exc_info=True)
        print(json.dumps(e.summary(), sort_keys=True), file=sys.stderr)
        return e.exit_code


if __name__ == '__main__':
    sys.exit(main())
