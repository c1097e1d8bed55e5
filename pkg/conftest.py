import numpy as np
import pytest

from spikeprune.engine.model import SpikingTransformer
from spikeprune.snnapi.models import ModelConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行桌面规模的慢速实验")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 桌面规模实验，需要 --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_cfg():
    """8×8 输入、4×4 token 网格、两个 block"""
    return ModelConfig(time_steps=2, input_height=8, input_width=8, patch_size=2, embed_dim=8,
                       num_blocks=2, heads=2, mlp_ratio=2, num_classes=2)


@pytest.fixture
def merge_cfg():
    return ModelConfig(time_steps=2, input_height=8, input_width=8, patch_size=2, embed_dim=8,
                       num_blocks=2, heads=2, mlp_ratio=2, num_classes=2, has_merge_stage=True)


@pytest.fixture
def tiny_model(tiny_cfg):
    return SpikingTransformer(tiny_cfg)


@pytest.fixture
def images(rng):
    return [rng.uniform(0.0, 2.0, size=(8, 8, 1)) for _ in range(6)]
