#!/usr/bin/env python
import argparse
import logging

from cplab.agents import get_api
from cplab.config import load_config
from cplab.experiment import load_spec, tree_text
from cplab.llm import Transcript, get_backend
from cplab.metrics import jain_index, windowed_throughput

logger = logging.getLogger('demo')


def parse_args():
    parser = argparse.ArgumentParser(
        description='CP-agent demo: one agent next to a TDMA node'
    )

    parser.add_argument('--scenario', dest='scenario',
                        help='The scenario file.',
                        default='assets/scenarios/1t-1h.json', type=str)

    parser.add_argument('--frames', dest='frames',
                        help='Frames (MAC) or rounds (TCP) of the online run.',
                        default=1000, type=int)

    parser.add_argument('--config', dest='config',
                        help='Agent defaults (JSON).',
                        default=None, type=str)

    parser.add_argument('--backend', dest='backend',
                        help='Completion backend, scripted or http.',
                        default='scripted', type=str)

    parser.add_argument('--seed', dest='seed',
                        help='Scenario seed.',
                        default=0, type=int)

    args = parser.parse_args()

    return args


def main():
    args = parse_args()
    logging.basicConfig(level=logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')

    spec = load_spec(args.scenario, args.seed)
    spec = spec.with_frames(args.frames) if spec.family == 'mac' else \
        spec.with_rounds(args.frames)
    config = load_config(args.config)
    logger.info('Scenario %s, %d steps', spec.name, args.frames)

    backend = get_backend(args.backend, transcript=Transcript())
    api = get_api(spec.family)(spec, config, backend)

    logger.info('Learning strategies offline...')
    pset = api.offline()
    for s in pset:
        logger.info('Strategy %s: base %s, %d rule(s)', s.id,
                    s.base_action, len(s.rules))

    logger.info('Running online...')
    world = api.online()

    if spec.family == 'mac':
        series = windowed_throughput(world.log, config.rmse_window)
        shares = [series.series(n)[-1] for n in series.node_ids]
        for n, x in zip(series.node_ids, shares):
            logger.info('Node %d throughput %.3f', n, x)
        logger.info('Jain index %.3f', jain_index(shares))

    doc, _ = api.export_decision_trace()
    print('\n'.join(tree_text(doc['tree'])))
    logger.info('%d backend calls, %d escapes, %d fallbacks',
                len(backend.transcript.entries), api.escapes, api.fallbacks)


if __name__ == '__main__':
    main()
