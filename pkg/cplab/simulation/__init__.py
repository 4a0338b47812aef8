from .factory import build_scenario, get_world
from .io import parse_scenario, parse_scenario_from_file
from .scenario import FlowConfig, NodeConfig, ScenarioSpec, TcpScenarioSpec
