import json
import logging

from ..errors import InvalidSpecError, MissingArtifactError
from ..formats import parse_element
from .scenario import (KIND_DEFAULTS, FlowConfig, NodeConfig, ScenarioSpec,
                       TcpScenarioSpec)
from .schema import mac_root, tcp_root

logger = logging.getLogger(__name__)


def parse_scenario_from_file(path):
    """Parse a MAC or TCP scenario from its JSON file."""
    try:
        with open(path) as f:
            text = f.read()
    except FileNotFoundError:
        raise MissingArtifactError(path, 'scenario file not found')
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidSpecError(
            str(path), 'invalid JSON at line {} column {}: {}'.format(
                e.lineno, e.colno, e.msg))
    spec = parse_scenario(data)
    logger.debug('Parsed %s scenario %s from %s', spec.family,
                 spec.describe(), path)
    return spec


def parse_scenario(data):
    """Build a ScenarioSpec or TcpScenarioSpec from a decoded document."""
    if not isinstance(data, dict):
        raise InvalidSpecError('<root>', 'expected an object')
    version = data.get('version')
    if version == mac_root['version']:
        return _build_mac(_parse(mac_root, data))
    elif version == tcp_root['version']:
        return _build_tcp(_parse(tcp_root, data))
    else:
        raise InvalidSpecError('version',
                               'unrecognized scenario version {!r}'.format(
                                   version))


def _parse(root, data):
    diagnostics = []
    descr = parse_element(root, data, '', diagnostics)
    if diagnostics:
        d = diagnostics[0]
        raise InvalidSpecError(_as_field_path(d.path), d.message)
    return descr


def _as_field_path(path):
    """`nodes.1.q` -> `nodes[1].q`"""
    out = []
    for part in path.split('.'):
        if part.isdigit() and out:
            out[-1] += '[{}]'.format(part)
        else:
            out.append(part)
    return '.'.join(out)


def _build_mac(descr):
    nodes = []
    for i, n in enumerate(descr['nodes']):
        defaults = KIND_DEFAULTS.get(n['kind'], {})
        window = n['window'] if n['window'] is not None else defaults.get(
            'window')
        stage = n['max_stage'] if n['max_stage'] is not None else \
            defaults.get('max_stage')
        nodes.append(NodeConfig(
            id=n['id'] if n['id'] is not None else i,
            kind=n['kind'],
            q=n['q'],
            slots=frozenset(n['slots'] or ()),
            window=window,
            max_stage=stage,
            join_frame=n['join_frame'],
            leave_frame=n['leave_frame']))
    return ScenarioSpec(
        nodes=tuple(nodes),
        total_frames=descr['total_frames'],
        frame_len=descr['frame_len'],
        slot_duration=descr['slot_duration'],
        seed=descr['seed'],
        name=descr['name'])


def _build_tcp(descr):
    flows = []
    for i, f in enumerate(descr['flows']):
        flows.append(FlowConfig(
            id=f['id'] if f['id'] is not None else i,
            controller=f['controller'],
            start_round=f['start_round'],
            stop_round=f['stop_round'],
            init_cwnd=f['init_cwnd']))
    return TcpScenarioSpec(
        flows=tuple(flows),
        total_rounds=descr['total_rounds'],
        capacity_mbps=descr['capacity_mbps'],
        packet_bytes=descr['packet_bytes'],
        base_rtt=descr['base_rtt'],
        buffer=descr['buffer'],
        c_max=descr['c_max'],
        seed=descr['seed'],
        name=descr['name'])


def save_scenario(spec, path):
    with open(path, 'w') as f:
        json.dump(spec.to_dict(), f, indent=2, sort_keys=True)
        f.write('\n')
