import pathlib
import sys
import time

import pytest

# lets test modules import the shared oracles and fixtures by name
sys.path.insert(0, str(pathlib.Path(__file__).parent))


@pytest.fixture(scope="session")
def default_matrix():
    """The default 60-coordinate run, shared by every test that needs it."""
    from epiplan.bench import MatrixConfig, run_matrix

    config = MatrixConfig()
    started = time.perf_counter()
    records = run_matrix(config)
    return config, records, time.perf_counter() - started
