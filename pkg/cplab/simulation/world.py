class World(object):
    """World base class."""

    def __init__(self, spec, verbose=False):
        """Initialize the simulator.

        Args:
            spec: ScenarioSpec or TcpScenarioSpec of the experiment.
            verbose: log every population change at INFO level.
        """
        self._spec = spec
        self._verbose = verbose

    def load(self):
        """Build the per-node (or per-flow) state from the scenario."""
        raise NotImplementedError

    def start(self):
        """Start the simulation."""
        raise NotImplementedError

    def restart(self):
        """Restart the simulation from its seed."""
        self.load()
        self.start()

    def step(self, decisions):
        """Take a simulation step."""
        raise NotImplementedError

    @property
    def spec(self):
        return self._spec

    @property
    def seed(self):
        return self._spec.seed

    @property
    def family(self):
        return self._spec.family

    @property
    def done(self):
        raise NotImplementedError
