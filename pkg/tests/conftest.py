import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from infodesign.congestion import CongestionParams, generate_congestion
from infodesign.lp import available_backends
from infodesign.solver import backward_induct

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def congestion_spec():
    return generate_congestion(CongestionParams())


@pytest.fixture(scope="session")
def congestion_solution(congestion_spec):
    return backward_induct(congestion_spec, memoize=True)


@pytest.fixture(scope="session")
def small_congestion():
    spec = generate_congestion(CongestionParams(k=3, t=2))
    return spec, backward_induct(spec, memoize=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
