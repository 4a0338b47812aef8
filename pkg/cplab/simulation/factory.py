from .mac_world import MacWorld
from .tcp_world import TcpWorld


def get_world(spec, verbose=False, beta=0.5):
    """Build and start the simulator matching the scenario family."""
    if spec.family == 'mac':
        world = MacWorld(spec, verbose=verbose)
    elif spec.family == 'tcp':
        world = TcpWorld(spec, beta=beta, verbose=verbose)
    else:
        raise ValueError('Unrecognized scenario family {}'.format(spec.family))
    world.load()
    world.start()
    return world


def build_scenario(spec):
    """Environment with per-node state initialized and seeded."""
    return get_world(spec)
