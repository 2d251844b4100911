import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def enumerate_log_z_and_means(model):
    """Reference enumeration with itertools.product and explicit feature products."""
    n = model.num_vars
    logs, feats = [], []
    for x in itertools.product((0, 1), repeat=n):
        f = [float(all(x[i] for i in b)) for b in model.cliques.blocks]
        feats.append(f)
        logs.append(float(np.dot(f, model.weights)))
    logs = np.array(logs)
    top = logs.max()
    log_z = top + np.log(np.exp(logs - top).sum())
    p = np.exp(logs - log_z)
    return log_z, p @ np.array(feats), p


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid4_summary():
    """Summary of the 4x4 grid experiment (10 runs, N = 100, 1000, 10000)."""
    from lapmrf.checks import grid4_summary

    return grid4_summary()
