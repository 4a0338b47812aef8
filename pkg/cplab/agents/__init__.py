from .api import CPAgent, MacAgentAPI, TcpAgentAPI, get_api
from .demos import DemoSet, DemoTuple, generate_demos
from .psa import StrategySet, psa_update
from .runner import evaluate_strategy
