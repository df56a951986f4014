import os

os.environ["TESTING"] = "True"

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from src.business.autodiff import get_tape  # noqa: E402
from src.business.services import make_pair  # noqa: E402
from src.data.schemas import NetworkConfig  # noqa: E402


@pytest.fixture(autouse=True)
def clean_tape():
    get_tape().clear()
    yield
    get_tape().clear()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Two-stage network that accepts 8^3 volumes."""
    return NetworkConfig(
        stages=2,
        channels=[4, 8],
        stride_k=[2, 1],
        bottleneck_d=4,
        lncc_window=3,
        ffn_expansion=2,
        lr=1e-3,
        seed=7,
    )


@pytest.fixture
def tiny_pair():
    return make_pair(3, (8, 8, 8), amplitude=1.0, smoothness=2.0, num_labels=2)


@pytest.fixture
def tiny_config_text():
    return (
        "stages=2\n"
        "channels=4,8\n"
        "stride_k=2,1\n"
        "bottleneck_d=4\n"
        "lncc_window=3\n"
        "ffn_expansion=2\n"
        "seed=7\n"
    )
