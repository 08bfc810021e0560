import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from agemon.campaign import CampaignConfig, build_devices


@pytest.fixture
def default_config():
    return CampaignConfig()


@pytest.fixture
def device(default_config):
    return build_devices(default_config)[0]


@pytest.fixture
def fleet(default_config):
    return build_devices(default_config)


def make_rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture
def rng():
    return make_rng()
