import os

import pytest

from cplab.config import AgentConfig
from cplab.llm import ScriptedBackend, Transcript
from cplab.simulation import (FlowConfig, NodeConfig, ScenarioSpec,
                              TcpScenarioSpec)

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), 'assets', 'scenarios')


def aloha(nid, q=0.2, **kwargs):
    return NodeConfig(nid, 'aloha', q=q, **kwargs)


def tdma(nid, slots=(3, 5), **kwargs):
    return NodeConfig(nid, 'tdma', slots=frozenset(slots), **kwargs)


def agent(nid, **kwargs):
    return NodeConfig(nid, 'agent', **kwargs)


def mac_spec(*nodes, frames=1000, seed=0, name=None):
    return ScenarioSpec(tuple(nodes), frames, seed=seed, name=name)


def tcp_spec(*controllers, rounds=400, seed=0, name=None):
    flows = tuple(FlowConfig(i, c) for i, c in enumerate(controllers))
    return TcpScenarioSpec(flows, rounds, seed=seed, name=name)


@pytest.fixture
def seed():
    return 7


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture
def scripted():
    return ScriptedBackend(transcript=Transcript())


@pytest.fixture
def small_config():
    """Short demonstrations and evaluations so agent tests stay fast."""
    return AgentConfig(demo_k=4, demo_frames=100, demo_rounds=100,
                       eval_frames=300, eval_rounds=200, n_max=3)


@pytest.fixture
def run_dir(tmp_path):
    return str(tmp_path / 'runs')
