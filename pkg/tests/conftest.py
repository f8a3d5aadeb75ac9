import numpy as np
import pytest

import qrwt

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def c3_gns():
    """The rank-two state diag(0.7, 0.3, 0) on C^3."""
    return qrwt.build_gns(np.diag([0.7, 0.3, 0.0]))


@pytest.fixture(scope="session")
def c3_cond(c3_gns):
    """Diagonal pinching on the two-dimensional support."""
    return qrwt.build_cond_exp(c3_gns, [[1], [2]])


@pytest.fixture(scope="session")
def pure_gns():
    """The vector state |e1><e1| on C^3."""
    rho = np.zeros((3, 3))
    rho[0, 0] = 1.0
    return qrwt.build_gns(rho)


@pytest.fixture(scope="session")
def pure_cond(pure_gns):
    return qrwt.build_cond_exp(pure_gns, [[1]])


def random_matrix(rng, d, scale=1.0):
    return scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))


def random_kernel_element(rng, g):
    """A random element of ker(state): X with tr(rho X) = 0."""
    x = random_matrix(rng, g.dim_k)
    return x - complex(np.trace(g.state.rho @ x)) * np.eye(g.dim_k)
