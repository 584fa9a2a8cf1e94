import numpy as np
import pytest

from kossakowski.config import Config, OptimizerConfig, OracleConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20231117)


@pytest.fixture
def fast_optimizer():
    return OptimizerConfig(restarts=40, iterations=300)


@pytest.fixture
def fast_oracle():
    return OracleConfig(samples=2000, grid_resolution=8)


@pytest.fixture
def config(tmp_path, fast_optimizer, fast_oracle):
    return Config(results_path=str(tmp_path / "results"), optimizer=fast_optimizer, oracle=fast_oracle)