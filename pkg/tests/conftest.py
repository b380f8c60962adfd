import numpy as np
import pytest

from svfourier.likelihood import LikelihoodContext
from svfourier.models import make_expou, make_heston
from svfourier.simulate import SimConfig, simulate
from svfourier.spotvol import EstimatorConfig, estimate_spot_vol

DESK_N = 2**17
DESK_CUTOFF = 2**8

ACCEPTANCE_RESULTS = []


def record(criterion, passed, detail):
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


class Fixture:
    def __init__(self, model, seed, n=DESK_N, N=DESK_CUTOFF):
        self.model = model
        self.path = simulate(model, SimConfig(n=n, seed=seed))
        self.estimate = estimate_spot_vol(self.path, model, EstimatorConfig(N=N))
        self.ctx = LikelihoodContext.from_estimate(self.path, self.estimate, model)
        self.true_ctx = LikelihoodContext.from_fine_path(self.path, self.estimate.grid_index, model)


@pytest.fixture(scope="session")
def heston_desk():
    return Fixture(make_heston(), seed=0)


@pytest.fixture(scope="session")
def expou_desk():
    return Fixture(make_expou(), seed=0)


@pytest.fixture(scope="session")
def heston_small():
    return Fixture(make_heston(), seed=7, n=2**13, N=2**6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
