import os
from pathlib import Path

import numpy as np
import pytest

# Heavy simulated tables are cached here so repeated runs stay fast.
os.environ.setdefault("ADEQUATE_CACHE_DIR",
                      str(Path(__file__).resolve().parent.parent / ".cache"))

from adequate import gauss_region as gr          # noqa: E402
from adequate.datasets import load_builtin       # noqa: E402


@pytest.fixture(scope="session")
def copper() -> np.ndarray:
    return load_builtin("copper")


@pytest.fixture(scope="session")
def sim_config() -> gr.SimConfig:
    return gr.SimConfig()


@pytest.fixture(scope="session")
def light_config() -> gr.SimConfig:
    """Cheaper tables for tests that only need moderate tail resolution."""
    return gr.SimConfig(table_replications=20_000, calibration_replications=4_000)
