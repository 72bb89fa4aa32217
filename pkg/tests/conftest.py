import numpy as np
import pytest

from irs_isac.ao import SinrTargets
from irs_isac.channel import (ArrayGeometry, ChannelModel, ScenarioGeometry, dbm_to_watts,
                              sample_channels)
from irs_isac.radar import AngularGrid, design_desired_covariance

P0 = float(dbm_to_watts(20.0))
SIGMA2 = float(dbm_to_watts(-114.0))


def small_model(n=4, l=6, k=2, eps_mode="none", eps=0.0):
    return ChannelModel(ArrayGeometry(n), l, k, ScenarioGeometry.uniform(k),
                        eps_mode=eps_mode, eps=eps)


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid():
    return AngularGrid.uniform()


@pytest.fixture(scope="session")
def small_setup(grid):
    """N=4, L=6, K=2 instance with its desired covariance and 10 dB targets."""
    model = small_model()
    geom = model.bs
    desired = design_desired_covariance(grid, P0, geom)
    ch = sample_channels(model, 7)
    targets = SinrTargets.from_db(10.0, SIGMA2, 2)
    return ch, desired, targets, geom


# one "criterion n: PASS|FAIL ..." line per acceptance check, echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
