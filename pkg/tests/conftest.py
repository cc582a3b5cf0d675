import pytest

from chaplygin import (
    ChaplyginEos,
    IntegrationConfig,
    _backend,
    exponents_for,
    integrate,
)

BACKENDS = sorted(_backend.AVAILABLE)

# Outcome lines collected by test_acceptance and echoed after the run.
ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def smooth_problem():
    """Variant III, n = 1, A = 50: reaches eta_end = 5 from the default start."""
    exp = exponents_for("III", 1.0)
    eos = ChaplyginEos(50.0, 1.0)
    config = IntegrationConfig()
    return config, exp, eos


@pytest.fixture(scope="session")
def smooth_table(smooth_problem):
    config, exp, eos = smooth_problem
    return integrate(config, exp, eos)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
