import numpy as np
import pytest

from eebeam import scenario_from_dict, default_scenario_dict


def random_instance(rng, K, M, scale=1.0):
    H = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / np.sqrt(2)
    W = scale * (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)
    sigma2 = float(rng.uniform(0.1, 2.0))
    alpha = rng.uniform(0.2, 1.5, size=K)
    P0 = float(rng.uniform(0.1, 5.0))
    return H, W, sigma2, alpha, P0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_cfg():
    return scenario_from_dict(default_scenario_dict())


@pytest.fixture(scope="session")
def sat_channel(default_cfg):
    params, gains, ch = default_cfg.realize(1)
    return params, gains, ch


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
