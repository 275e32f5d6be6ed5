import numpy as np
import pytest

ACCEPTANCE_LINES = []


class ZeroStream:
    """Stand-in generator whose normals are all zero."""

    def standard_normal(self, size=None):
        return np.zeros(size) if size is not None else 0.0


class FixedStream:
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def standard_normal(self, size=None):
        return self.values.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_psd(rng, d, cond=1e3):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = np.exp(rng.uniform(0, np.log(cond), d))
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
