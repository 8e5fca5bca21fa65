import itertools
import math

import numpy as np
import pytest

from lostsales import distributions as dist

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def enumerate_sum(atoms, probs, n):
    """Law of S_n by listing all |support|^n outcomes."""
    vals, weights = [], []
    for combo in itertools.product(range(len(atoms)), repeat=n):
        vals.append(sum(atoms[i] for i in combo))
        weights.append(math.prod(probs[i] for i in combo))
    return np.array(vals, dtype=float), np.array(weights)


def lattice_levels(atoms, probs, step, n_max):
    """pmfs of S_1..S_n on the grid ``step * k``, by repeated np.convolve.
    Independent of the library's trimmed, cached engine."""
    idx = np.rint(np.asarray(atoms) / step).astype(int)
    kernel = np.zeros(idx.max() + 1)
    np.add.at(kernel, idx, probs)
    pmf = kernel.copy()
    out = [pmf]
    for _ in range(n_max - 1):
        pmf = np.convolve(pmf, kernel)
        out.append(pmf)
    return out


@pytest.fixture
def exp1():
    return dist.Demand.exponential(1.0)


@pytest.fixture
def two_point():
    return dist.Demand.discrete([(0, 0.5), (2, 0.5)])


@pytest.fixture
def three_point():
    return dist.Demand.discrete([(0, 0.2), (1, 0.3), (3, 0.5)])
