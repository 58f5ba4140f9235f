import numpy as np
import pytest

from hrom.gait import GaitParams, build_gait
from hrom.params import GroundParams, RobotParams
from hrom.sim import SimConfig, simulate


@pytest.fixture(scope="session")
def robot():
    return RobotParams()


@pytest.fixture(scope="session")
def ground():
    return GroundParams()


@pytest.fixture(scope="session")
def plan(robot):
    return build_gait(GaitParams(), robot)


@pytest.fixture(scope="session")
def walk(plan, robot, ground):
    """The default 3.5 s walk, simulated once per session."""
    return simulate(SimConfig(), plan, robot, ground)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
