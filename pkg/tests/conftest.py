import numpy as np
import pytest

from orowan.corrector import solve_corrector
from orowan.layer import solve_layer
from orowan.potential import make_standard_potential, make_two_harmonic_potential


@pytest.fixture(scope="session")
def standard():
    return make_standard_potential()


@pytest.fixture(scope="session")
def two_harmonic():
    return make_two_harmonic_potential()


@pytest.fixture(scope="session")
def std_layer(standard):
    return solve_layer(standard, 40.0, 2048)


@pytest.fixture(scope="session")
def two_layer(two_harmonic):
    return solve_layer(two_harmonic, 40.0, 2048)


@pytest.fixture(scope="session")
def two_corr(two_layer, two_harmonic):
    return {L: solve_corrector(two_layer, two_harmonic, L) for L in (0.0, 1.0, 2.0)}


@pytest.fixture(scope="session")
def std_corr(std_layer, standard):
    return {L: solve_corrector(std_layer, standard, L) for L in (0.0, 1.0)}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
