import pytest

from metaspec import chain, mesh, potential, stable

ALPHA = 1.8

# one line per acceptance check, echoed after the run summary
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def verdict():
    def record(num, ok, detail):
        line = f"criterion {num:02d}: {'pass' if ok else 'FAIL'} ({detail})"
        VERDICTS.append(line)
        print(line)
        return ok
    return record


@pytest.fixture(scope="session")
def pot():
    # narrow corners: every state of the N=203 mesh then sees |U'| = 1
    return potential.example_potential(halfwidth=1e-4)


@pytest.fixture(scope="session")
def params18():
    return stable.make_params(ALPHA)


@pytest.fixture(scope="session")
def mesh203(pot):
    return mesh.build_uniform(pot, 5.0, 203, 10 / 203)


@pytest.fixture(scope="session")
def mesh30(pot):
    return mesh.build_uniform(pot, 5.0, 30, 10 / 30)


@pytest.fixture(scope="session")
def limitQ(pot):
    return chain.limit_generator(pot, ALPHA)


class Pipeline:
    """Session-wide cache of (P, generator) pairs on one mesh, keyed by eps."""

    def __init__(self, m, params):
        self.mesh = m
        self.params = params
        self._cache = {}

    def at(self, eps):
        if eps not in self._cache:
            P = chain.transition_matrix(self.mesh, ALPHA, eps, self.params)
            self._cache[eps] = (P, chain.generator(P))
        return self._cache[eps]


@pytest.fixture(scope="session")
def pipeline(mesh203, params18):
    return Pipeline(mesh203, params18)
