import numpy as np
import pytest
from scipy.stats import unitary_group


def random_hermitian(d, rng):
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (x + x.conj().T) / 2


def random_density(d, rng):
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def random_unitary(d, rng):
    return unitary_group.rvs(d, random_state=rng)


def random_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()
N_CRITERIA = 8


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for an acceptance criterion, then assert it."""
    results = request.config.stash[ACCEPTANCE]

    def record(k, passed, detail):
        results[k] = (bool(passed), detail)
        assert passed, f"criterion {k}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        if k in results:
            passed, detail = results[k]
            terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}")
        else:
            terminalreporter.write_line(f"NOT RUN criterion {k}: deselected or errored before a verdict")
