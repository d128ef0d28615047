import numpy as np
import pytest

from gnarspec.graph import Network, NetworkContext
from gnarspec.io import builtin_network


@pytest.fixture
def path3():
    return Network(3, [(0, 1), (1, 2)])


@pytest.fixture
def star5():
    """Centre 0 with leaves 1..4."""
    return Network(5, [(0, k) for k in range(1, 5)])


@pytest.fixture(scope="session")
def ctx5():
    return NetworkContext.from_network(builtin_network("net5"))


@pytest.fixture(scope="session")
def ctx10():
    return NetworkContext.from_network(builtin_network("net10"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hpd(rng, d, batch=None, cond=10.0):
    """Random Hermitian positive-definite matrices."""
    shape = (d, d) if batch is None else (batch, d, d)
    Z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    M = Z @ np.swapaxes(Z.conj(), -1, -2) / d
    return M + np.eye(d) * (np.trace(M, axis1=-2, axis2=-1).real[..., None, None] / (d * cond))


def pytest_configure(config):
    config.acceptance = {}


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        parts = results[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'pass' if good else 'FAIL'} ({msg})" for name, good, msg in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
