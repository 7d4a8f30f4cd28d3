import numpy as np
import pytest

from epsolve import SolverConfig, TerminationRule, run_algorithm1, run_algorithm2
from epsolve.problems import NASH_COURNOT_X0, build_nash_cournot, build_quasimonotone_vi

VI_STARTS = [(0, 0), (0, 1), (1, 0), (1, 1), (0.3, 0.5), (0.7, 0.1)]


@pytest.fixture(scope="session")
def nash():
    return build_nash_cournot()


@pytest.fixture(scope="session")
def qvi():
    return build_quasimonotone_vi()


def vi_config(x0, theta=0.95, **kw):
    return SolverConfig(theta=theta, delta=0.01, x0=x0,
                        termination=TerminationRule("xy", 1e-8), **kw)


def nash_config(theta=0.5, **kw):
    kw.setdefault("delta", 0.01)
    return SolverConfig(theta=theta, x0=NASH_COURNOT_X0, **kw)


@pytest.fixture(scope="session")
def vi_runs(qvi):
    return {x0: run_algorithm2(qvi, vi_config(x0)) for x0 in VI_STARTS}


@pytest.fixture(scope="session")
def nash_run(nash):
    return run_algorithm1(nash, nash_config(0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
