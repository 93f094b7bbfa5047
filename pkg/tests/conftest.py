import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from refrig_imc.lti import Polynomial

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def poly_from_roots(roots):
    """Ascending coefficients of prod(x - r)."""
    return Polynomial(np.real(np.poly(roots))[::-1])


def z_den_from_poles(poles):
    """z^-1 denominator 1 + a1 z^-1 + ... with the given z-plane poles."""
    return Polynomial(np.real(np.poly(poles)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary, then assert."""
    lines = request.config.stash[ACCEPTANCE_LINES]

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
