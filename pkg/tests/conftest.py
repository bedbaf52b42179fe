import numpy as np
import pytest
from hypothesis import settings

from rsfr.core import DopplerMode, RadarParams, build_observation_matrix, draw_codes

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_matrix(n, m, seed=0, mode=DopplerMode.SIMPLIFIED, **kw):
    params = RadarParams(n, m, **kw)
    return build_observation_matrix(params, draw_codes(params, seed), mode)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
